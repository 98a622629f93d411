#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

#include "maxel/scores.hpp"

namespace maxel {

class ParseError : public std::runtime_error {
 public:
  ParseError(std::size_t line, const std::string& what)
      : std::runtime_error("line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

struct ScoreTable {
  std::vector<std::string> names;
  ScoreMatrix scores;
};

/// Header row of policy names, then one row of J decimal numbers per
/// observation. Blank trailing lines are ignored.
ScoreTable read_score_csv(std::istream& in);
ScoreTable read_score_csv(const std::filesystem::path& path);

void write_score_csv(std::ostream& out, const ScoreMatrix& scores, const std::vector<std::string>& names = {});

std::vector<std::string> default_policy_names(Eigen::Index num_policies);

/// 17 significant digits, enough to round-trip a double.
std::string format_double(double v);

}  // namespace maxel
