#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"

#include "grandcouple/couplings.hpp"
#include "grandcouple/measures.hpp"
#include "grandcouple/rng.hpp"

namespace grandcouple {

struct ExperimentConfig {
  std::string experiment;
  std::uint64_t seed = 0;
  std::size_t replicates = 0;  // 0: the command's default
  int workers = 1;
  std::string out;
  nlohmann::json params = nlohmann::json::object();  // everything else in the file

  // Throws InvalidInput on a malformed document.
  static ExperimentConfig from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;
};

ExperimentConfig load_config(const std::string& path);

// Comma-separated, LF line endings, header first.
class CsvTable {
 public:
  explicit CsvTable(std::vector<std::string> header) : header_(std::move(header)) {}

  void add_row(std::vector<std::string> cells);
  const std::vector<std::string>& header() const { return header_; }
  const std::vector<std::vector<std::string>>& rows() const { return rows_; }
  std::string str() const;
  void write(const std::string& path) const;

 private:
  std::vector<std::string> header_;
  std::vector<std::vector<std::string>> rows_;
};

// "%.10g", with inf spelled "inf"; the form used in every table.
std::string fmt(double v);
std::string fmt(std::size_t v);

struct NamedTable {
  std::string suffix;  // appended to the output stem; empty for the main table
  CsvTable table;
};

struct CommandOutput {
  std::vector<NamedTable> tables;
  bool breach = false;  // censoring or timeout threshold exceeded
  std::string breach_reason;
};

// Couplers by name: greedy-list, poisson, random-anchor, random-sequence.
Coupler coupler_by_name(const std::string& name);

// C measures on 60 states, each supported on 5 random states with
// Dirichlet(1) weights. The "identical" family is C copies of a point mass.
std::vector<Measure> random_sparse_discrete(std::size_t c, std::size_t n_states,
                                            std::size_t support, RngStream& stream);
// P_i = i + Exp(1), i = 0..C-1
std::vector<Measure> shifted_exponential_family(std::size_t c);

CommandOutput cmd_multimarginal(const ExperimentConfig& cfg);
CommandOutput cmd_meet(const ExperimentConfig& cfg);
CommandOutput cmd_runtime(const ExperimentConfig& cfg);
CommandOutput cmd_diagnose(const ExperimentConfig& cfg);
CommandOutput cmd_harmonize(const ExperimentConfig& cfg);

CommandOutput run_command(const ExperimentConfig& cfg);

// Writes every table next to cfg.out plus a <out>.meta.json sidecar.
void write_outputs(const ExperimentConfig& cfg, const CommandOutput& out, double wall_seconds);

std::uint64_t fnv1a64(const std::string& bytes);

}  // namespace grandcouple
