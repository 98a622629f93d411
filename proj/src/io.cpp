#include "maxel/io.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <string_view>

namespace maxel {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    const auto comma = line.find(',', start);
    out.push_back(trim(line.substr(start, comma - start)));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

}  // namespace

ScoreTable read_score_csv(std::istream& in) {
  std::string line;
  std::size_t lineno = 0;
  std::vector<std::string> names;
  while (std::getline(in, line)) {
    ++lineno;
    if (!trim(line).empty()) break;
  }
  if (trim(line).empty()) throw ParseError(lineno == 0 ? 1 : lineno, "missing header row");
  if (lineno == 1 && line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line.erase(0, 3);
  for (auto f : split(line)) {
    if (f.empty()) throw ParseError(lineno, "empty policy name in header");
    names.emplace_back(f);
  }
  const auto num = static_cast<Eigen::Index>(names.size());

  std::vector<double> values;
  Eigen::Index rows = 0;
  std::size_t blank_run_start = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) {
      if (blank_run_start == 0) blank_run_start = lineno;
      continue;
    }
    if (blank_run_start != 0) throw ParseError(blank_run_start, "blank line inside data");
    const auto fields = split(line);
    if (static_cast<Eigen::Index>(fields.size()) != num) {
      throw ParseError(lineno, "expected " + std::to_string(num) + " fields, found " + std::to_string(fields.size()));
    }
    for (std::size_t c = 0; c < fields.size(); ++c) {
      const auto f = fields[c];
      if (f.empty()) throw ParseError(lineno, "missing value in column " + std::to_string(c + 1));
      double v = 0.0;
      const char* first = f.data();
      if (*first == '+') ++first;
      const auto [ptr, ec] = std::from_chars(first, f.data() + f.size(), v);
      if (ec != std::errc() || ptr != f.data() + f.size()) {
        throw ParseError(lineno, "not a number in column " + std::to_string(c + 1) + ": '" + std::string(f) + "'");
      }
      if (!std::isfinite(v)) throw ParseError(lineno, "non-finite value in column " + std::to_string(c + 1));
      values.push_back(v);
    }
    ++rows;
  }
  if (rows < 2) throw ParseError(lineno, "need at least two observations");
  Eigen::MatrixXd x(rows, num);
  for (Eigen::Index i = 0; i < rows; ++i) {
    for (Eigen::Index j = 0; j < num; ++j) x(i, j) = values[static_cast<std::size_t>(i * num + j)];
  }
  return {std::move(names), ScoreMatrix(std::move(x))};
}

ScoreTable read_score_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError(0, "cannot open " + path.string());
  return read_score_csv(in);
}

std::vector<std::string> default_policy_names(Eigen::Index num) {
  std::vector<std::string> names;
  for (Eigen::Index j = 0; j < num; ++j) names.push_back("policy_" + std::to_string(j + 1));
  return names;
}

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write_score_csv(std::ostream& out, const ScoreMatrix& scores, const std::vector<std::string>& names) {
  const auto header = names.empty() ? default_policy_names(scores.num_policies()) : names;
  if (static_cast<Eigen::Index>(header.size()) != scores.num_policies()) {
    throw std::invalid_argument("write_score_csv: name count mismatch");
  }
  for (std::size_t j = 0; j < header.size(); ++j) out << (j ? "," : "") << header[j];
  out << '\n';
  const auto& x = scores.values();
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    for (Eigen::Index j = 0; j < x.cols(); ++j) out << (j ? "," : "") << format_double(x(i, j));
    out << '\n';
  }
}

}  // namespace maxel
