// Copyright 2026 The borep Authors
// SPDX-License-Identifier: Apache-2.0

// Exercises the shared library through its C header only.

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <string>

#include "borep/borep.h"

namespace {

const char* kProblem = R"({"kind": "quartic", "dims": [2, 2], "spectrum": [1, 2],
  "coupling": 0.5, "c": [0.5, -0.5], "upper": {"w": 1, "target": [1, -1]},
  "noise": 0.1, "x0": [2, 2], "seed": 3})";

std::string take(char* s) {
  std::string out(s ? s : "");
  borep_string_free(s);
  return out;
}

}  // namespace

TEST_CASE("run and export through the C API") {
  borep_problem* p = nullptr;
  REQUIRE(borep_problem_from_json(kProblem, &p) == BOREP_OK);
  borep_trace* a = nullptr;
  borep_trace* b = nullptr;
  REQUIRE(borep_run(p, "borep", R"({"K": 40})", 9, &a) == BOREP_OK);
  REQUIRE(borep_run(p, nullptr, R"({"algo": "borep", "K": 40})", 9, &b) == BOREP_OK);
  CHECK(borep_trace_size(a) == 41);
  char* ca = nullptr;
  char* cb = nullptr;
  REQUIRE(borep_trace_csv(a, &ca) == BOREP_OK);
  REQUIRE(borep_trace_csv(b, &cb) == BOREP_OK);
  CHECK(take(ca) == take(cb));
  char* summary = nullptr;
  REQUIRE(borep_trace_summary_json(a, &summary) == BOREP_OK);
  CHECK(take(summary).find("\"schema\": 1") != std::string::npos);
  char* info = nullptr;
  REQUIRE(borep_problem_info_json(p, &info) == BOREP_OK);
  CHECK(take(info).find("quartic") != std::string::npos);
  borep_trace_free(a);
  borep_trace_free(b);
  borep_problem_free(p);
}

TEST_CASE("diagnostic endpoints") {
  borep_problem* p = nullptr;
  REQUIRE(borep_problem_from_json(kProblem, &p) == BOREP_OK);
  char* out = nullptr;
  REQUIRE(borep_check_grad_json(p, R"({"tol": 1e-4})", &out) == BOREP_OK);
  CHECK(take(out).find("\"pass\": true") != std::string::npos);
  REQUIRE(borep_schedule_json(p, R"({"eps": 1.0, "delta": 0.1})", &out) == BOREP_OK);
  CHECK(take(out).find("\"I\"") != std::string::npos);
  REQUIRE(borep_smoothness_json(p, R"({"config": {"K": 100}, "points": true})", &out) == BOREP_OK);
  CHECK(take(out).find("\"fit\"") != std::string::npos);
  borep_problem_free(p);
}

TEST_CASE("errors map to status codes") {
  borep_problem* p = nullptr;
  CHECK(borep_problem_from_json("{oops", &p) == BOREP_INVALID);
  CHECK(p == nullptr);
  CHECK(std::string(borep_last_error()).size() > 0);
  CHECK(borep_problem_from_json(R"({"kind": "nope"})", &p) == BOREP_INVALID);
  CHECK(borep_problem_from_json(nullptr, &p) == BOREP_INVALID);
  REQUIRE(borep_problem_from_json(R"({"kind": "hyperclean", "n": 20, "d": 2})", &p) == BOREP_OK);
  char* out = nullptr;
  CHECK(borep_check_grad_json(p, nullptr, &out) == BOREP_UNSUPPORTED);
  borep_trace* t = nullptr;
  CHECK(borep_run(p, "borep", R"({"K": 5, "eta": -1})", 0, &t) == BOREP_INVALID);
  CHECK(t == nullptr);
  REQUIRE(borep_run(p, "soba", R"({"K": 5})", 0, &t) == BOREP_OK);
  CHECK(borep_trace_write_csv(t, "/nonexistent-dir/x.csv") == BOREP_RUNTIME);
  borep_trace_free(t);
  borep_problem_free(p);
  CHECK(borep_trace_size(nullptr) == 0);
  CHECK(std::string(borep_version()).size() > 0);
}
