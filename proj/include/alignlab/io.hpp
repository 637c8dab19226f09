#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "alignlab/dynamics.hpp"
#include "alignlab/montecarlo.hpp"
#include "alignlab/spectrum.hpp"
#include "alignlab/state.hpp"

namespace alignlab::io {

/// Shortest round-trip decimal form; non-finite values become `undef`.
std::string format_number(double v);
std::string format_number(std::optional<double> v);

/// Writes `content` to a sibling temporary file and renames it over `path`.
void write_file_atomic(const std::filesystem::path& path, std::string_view content);
std::string read_file(const std::filesystem::path& path);

/// Parses JSON text; syntax errors become ParseError with a 1-based line.
nlohmann::json parse_json(std::string_view text, const std::string& source = "<input>");
nlohmann::json read_json_file(const std::filesystem::path& path);

/// {"lambdas": [...], "k": int} plus "kappa2" (and optional "s_min",
/// "s_max") when a noise profile is given.
nlohmann::json to_json(const SpectrumD& spec, const NoiseProfileD* noise = nullptr);
SpectrumD spectrum_from_json(const nlohmann::json& j);
/// Reads "kappa2" and the optional "s_min" / "s_max" bounds.
NoiseProfileD noise_from_json(const nlohmann::json& j);

/// {"t": int, "c": [...]}.
nlohmann::json to_json(const StateD& x);
StateD state_from_json(const nlohmann::json& j);

/// index,lambda,block
std::string eigenvalues_csv(const SpectrumD& spec);
/// index,c
std::string state_csv(const StateD& x);
/// Parses the `index,c` layout. The time index is not stored and is 0.
StateD parse_state_csv(std::string_view text, const std::string& source = "<input>");
/// Reads a state from a `.json` or `.csv` file.
StateD read_state(const std::filesystem::path& path);

/// step,theta,loss[,sD,sB]
std::string trajectory_csv(const TrajectoryRecord& traj);

struct VerdictRow {
  std::string test;
  double theta = 0;
  double eta = 0;
  std::optional<double> eta_star;
  DriftVerdict verdict;
};

/// test,theta,eta,eta_star,predicted,mean,stderr,z,verdict
std::string verdict_csv(const std::vector<VerdictRow>& rows);

std::string sign_symbol(int s);

}  // namespace alignlab::io
