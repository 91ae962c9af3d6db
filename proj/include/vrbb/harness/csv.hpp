#pragma once

// CSV telemetry. Layout under the output directory:
//   runs/<stem>.csv   one per run: epoch,wall_time_sec,fval,gap,variance,step_size,grad_evals
//   runs.csv          every run with its final gap
//   index.csv         the winner of every (method, λ) cell
//   metadata.txt      run notes (no timings)
// Reals are written as %.16e, which reproduces every double exactly.

#include <cinttypes>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "vrbb/error.hpp"
#include "vrbb/harness/experiment.hpp"
#include "vrbb/optimizer.hpp"

namespace vrbb::harness {

inline constexpr const char* run_csv_header =
    "epoch,wall_time_sec,fval,gap,variance,step_size,grad_evals";
inline constexpr const char* index_csv_header =
    "dataset,model,lambda,method,step_kind,step_param,seed,final_gap,f_star,status,run_file";

namespace detail {

inline std::string real(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.16e", v);
  return buf;
}

inline double parse_real(const std::string& s) {
  char* end = nullptr;
  double v = std::strtod(s.c_str(), &end);
  if (end == s.c_str() || *end != '\0') throw io_error("bad CSV number '" + s + "'");
  return v;
}

inline std::vector<std::string> csv_fields(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur.push_back(c);
    }
  }
  out.push_back(cur);
  return out;
}

inline std::string sanitize(std::string s) {
  for (auto& c : s)
    if (c == ',' || c == '\n' || c == '\r') c = '_';
  return s;
}

inline void write_file(const std::filesystem::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  if (!out) throw io_error("cannot write " + p.string());
  out << text;
  if (!out) throw io_error("write failed for " + p.string());
}

inline std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw io_error("cannot read " + p.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace detail

inline std::string records_to_csv(const std::vector<EpochRecord>& records) {
  std::string out = run_csv_header;
  out.push_back('\n');
  for (const auto& r : records) {
    out += std::to_string(r.epoch) + ',' + detail::real(r.wall_time_sec) + ',' +
           detail::real(r.fval) + ',' + detail::real(r.gap) + ',' + detail::real(r.variance) +
           ',' + detail::real(r.step_size) + ',' + std::to_string(r.grad_evals) + '\n';
  }
  return out;
}

inline std::vector<EpochRecord> records_from_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line != run_csv_header)
    throw io_error("run CSV has an unexpected header");
  std::vector<EpochRecord> out;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    auto f = detail::csv_fields(line);
    if (f.size() != 7) throw io_error("run CSV row has " + std::to_string(f.size()) + " fields");
    EpochRecord r;
    r.epoch = std::stoull(f[0]);
    r.wall_time_sec = detail::parse_real(f[1]);
    r.fval = detail::parse_real(f[2]);
    r.gap = detail::parse_real(f[3]);
    r.variance = detail::parse_real(f[4]);
    r.step_size = detail::parse_real(f[5]);
    r.grad_evals = std::stoull(f[6]);
    out.push_back(r);
  }
  return out;
}

inline std::vector<EpochRecord> read_run_csv(const std::filesystem::path& p) {
  return records_from_csv(detail::read_file(p));
}

inline std::string index_row(const RunRow& row, double final_gap, double f_star,
                             const std::string& status) {
  return detail::sanitize(row.dataset) + ',' + vrbb::to_string(row.model) + ',' +
         detail::real(row.lambda) + ',' + vrbb::to_string(row.method) + ',' +
         to_string(row.step_kind) + ',' + detail::real(row.step_param) + ',' +
         std::to_string(row.seed) + ',' + detail::real(final_gap) + ',' + detail::real(f_star) +
         ',' + status + ",runs/" + row.file_stem() + ".csv\n";
}

/// Writes every run plus runs.csv, index.csv and metadata.txt under `dir`.
inline void emit_csv(const ResultTable& table, const std::filesystem::path& dir) {
  if (table.rows.empty() && table.cells.empty()) throw config_error("result table is empty");
  std::filesystem::create_directories(dir / "runs");
  std::string runs = std::string(index_csv_header) + '\n';
  for (const auto& row : table.rows) {
    detail::write_file(dir / "runs" / (row.file_stem() + ".csv"), records_to_csv(row.records));
    double f_star = table.cells.at({row.lambda, row.method}).f_star;
    runs += index_row(row, row.final_gap(), f_star, row.diverged ? "diverged" : "ok");
  }
  detail::write_file(dir / "runs.csv", runs);

  std::string index = std::string(index_csv_header) + '\n';
  for (const auto& [key, cell] : table.cells) {
    if (cell.skipped) continue;
    const auto& row = table.rows.at(cell.winner);
    index += index_row(row, cell.winner_mean_gap, cell.f_star, "winner");
  }
  detail::write_file(dir / "index.csv", index);

  std::string meta = "dataset=" + table.dataset + "\nmodel=" + vrbb::to_string(table.model) + "\n";
  for (const auto& note : table.notes) meta += note + "\n";
  for (const auto& [key, cell] : table.cells)
    if (cell.skipped)
      meta += "skipped lambda=" + detail::real(key.lambda) + " method=" +
              vrbb::to_string(key.method) + ": " + cell.diagnostic + "\n";
  for (const auto& row : table.rows)
    if (row.diverged) meta += row.file_stem() + ": " + row.diagnostic + "\n";
  detail::write_file(dir / "metadata.txt", meta);
}

/// Rebuilds the winners-only table from index.csv and the run files it names.
inline ResultTable load_winners(const std::filesystem::path& dir) {
  std::istringstream in(detail::read_file(dir / "index.csv"));
  std::string line;
  if (!std::getline(in, line) || line != index_csv_header)
    throw io_error("index.csv has an unexpected header");
  ResultTable table;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    auto f = detail::csv_fields(line);
    if (f.size() != 11) throw io_error("index.csv row has " + std::to_string(f.size()) + " fields");
    RunRow row;
    row.dataset = f[0];
    row.model = loss_kind_from_string(f[1]);
    row.lambda = detail::parse_real(f[2]);
    row.method = method_from_string(f[3]);
    row.step_kind = f[4] == "eta" ? StepKind::constant
                    : f[4] == "eta0" ? StepKind::epochbb
                                     : StepKind::c1;
    row.step_param = detail::parse_real(f[5]);
    row.seed = std::stoull(f[6]);
    row.records = read_run_csv(dir / f[10]);
    CellInfo cell;
    cell.winner_mean_gap = detail::parse_real(f[7]);
    cell.f_star = detail::parse_real(f[8]);
    cell.winner = table.rows.size();
    table.dataset = row.dataset;
    table.model = row.model;
    table.cells[{row.lambda, row.method}] = cell;
    table.rows.push_back(std::move(row));
  }
  return table;
}

}  // namespace vrbb::harness
