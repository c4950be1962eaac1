// Copyright 2026 The borep Authors
// SPDX-License-Identifier: Apache-2.0

#include "borep/trace.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace borep {

namespace {

void put_double(std::string& out, const std::optional<double>& v) {
  if (!v) return;
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", *v);
  out += buf;
}

std::optional<double> parse_double(std::string_view field) {
  if (field.empty()) return std::nullopt;
  const std::string s(field);
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (end != s.c_str() + s.size()) fail(ErrorCode::kInvalidArgument, "bad number '" + s + "'");
  return v;
}

std::uint64_t parse_count(std::string_view field) {
  std::uint64_t v = 0;
  const auto res = std::from_chars(field.data(), field.data() + field.size(), v);
  if (res.ec != std::errc() || res.ptr != field.data() + field.size()) {
    fail(ErrorCode::kInvalidArgument, "bad count '" + std::string(field) + "'");
  }
  return v;
}

}  // namespace

std::string trace_to_csv(const std::vector<TraceRecord>& records) {
  std::string out = kTraceColumns;
  out += '\n';
  for (const auto& r : records) {
    out += std::to_string(r.k);
    for (const auto* v : {&r.grad_phi_exact, &r.grad_est_norm, &r.m_norm, &r.f_est, &r.y_err,
                          &r.z_err}) {
      out += ',';
      put_double(out, *v);
    }
    out += ',' + std::to_string(r.oracle_f) + ',' + std::to_string(r.oracle_g) + ',';
    out += r.degenerate_step ? '1' : '0';
    out += ',';
    put_double(out, r.wall_ms);
    out += '\n';
  }
  return out;
}

std::vector<TraceRecord> trace_from_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line != kTraceColumns) {
    fail(ErrorCode::kInvalidArgument, "trace CSV header does not match the expected columns");
  }
  std::vector<TraceRecord> out;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string_view> f;
    std::string_view rest(line);
    while (true) {
      const auto pos = rest.find(',');
      f.push_back(rest.substr(0, pos));
      if (pos == std::string_view::npos) break;
      rest.remove_prefix(pos + 1);
    }
    if (f.size() != 11) fail(ErrorCode::kInvalidArgument, "trace row must have 11 fields");
    TraceRecord r;
    r.k = parse_count(f[0]);
    r.grad_phi_exact = parse_double(f[1]);
    r.grad_est_norm = parse_double(f[2]);
    r.m_norm = parse_double(f[3]);
    r.f_est = parse_double(f[4]);
    r.y_err = parse_double(f[5]);
    r.z_err = parse_double(f[6]);
    r.oracle_f = parse_count(f[7]);
    r.oracle_g = parse_count(f[8]);
    require(f[9] == "0" || f[9] == "1", "degenerate_step must be 0 or 1");
    r.degenerate_step = f[9] == "1";
    r.wall_ms = parse_double(f[10]);
    out.push_back(r);
  }
  return out;
}

void write_trace(const RunTrace& trace, const std::string& path) {
  {
    std::ofstream out(path, std::ios::binary);
    if (!out) fail(ErrorCode::kRuntime, "cannot open " + path + " for writing");
    out << trace_to_csv(trace.records);
    if (!out) fail(ErrorCode::kRuntime, "failed writing " + path);
  }
  std::ofstream meta(path + ".json", std::ios::binary);
  if (!meta) fail(ErrorCode::kRuntime, "cannot open " + path + ".json for writing");
  meta << trace.header.dump(2) << '\n';
  if (!meta) fail(ErrorCode::kRuntime, "failed writing " + path + ".json");
}

std::optional<double> final_window_mean(const std::vector<TraceRecord>& records, double fraction) {
  if (records.empty()) return std::nullopt;
  const auto n = records.size();
  auto w = static_cast<std::size_t>(fraction * static_cast<double>(n));
  w = std::max<std::size_t>(1, std::min(w, n));
  double sum = 0.0;
  for (std::size_t i = n - w; i < n; ++i) {
    if (!records[i].grad_phi_exact) return std::nullopt;
    sum += *records[i].grad_phi_exact;
  }
  return sum / static_cast<double>(w);
}

nlohmann::json trace_summary(const RunTrace& trace) {
  nlohmann::json j;
  j["schema"] = 1;
  j["records"] = trace.records.size();
  j["oracle_counts"] = trace.counts;
  j["init_oracle_calls"] = trace.init_oracle_calls;
  j["lower_oracle_calls"] = trace.lower_oracle_calls;
  j["degenerate_steps"] = trace.degenerate_steps;
  if (!trace.records.empty()) {
    const auto& last = trace.records.back();
    j["final_k"] = last.k;
    if (last.grad_phi_exact) j["final_grad_phi"] = *last.grad_phi_exact;
    if (last.f_est) j["final_f"] = *last.f_est;
  }
  if (auto w = final_window_mean(trace.records, 0.1)) j["final_window_grad_phi"] = *w;
  j["x_final"] = vector_to_json(trace.x_final);
  return j;
}

}  // namespace borep
