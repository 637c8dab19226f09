#include "alignlab/io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <system_error>

#include "alignlab/errors.hpp"

namespace alignlab::io {

namespace fs = std::filesystem;
using nlohmann::json;

std::string format_number(double v) {
  if (!std::isfinite(v)) return "undef";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::string format_number(std::optional<double> v) {
  return v ? format_number(*v) : std::string("undef");
}

std::string sign_symbol(int s) { return s < 0 ? "-" : (s > 0 ? "+" : "0"); }

void write_file_atomic(const fs::path& path, std::string_view content) {
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open " + tmp.string() + " for writing");
    out.write(content.data(), std::streamsize(content.size()));
    out.flush();
    if (!out) throw IoError("failed writing " + tmp.string());
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) {
    fs::remove(tmp, ec);
    throw IoError("cannot move " + tmp.string() + " to " + path.string());
  }
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  if (in.bad()) throw IoError("failed reading " + path.string());
  return ss.str();
}

namespace {

std::size_t line_of(std::string_view text, std::size_t byte) {
  byte = std::min(byte, text.size());
  std::size_t line = 1;
  for (std::size_t i = 0; i < byte; ++i)
    if (text[i] == '\n') ++line;
  return line;
}

template <typename Fn>
auto schema(const std::string& what, Fn&& fn) -> decltype(fn()) {
  try {
    return fn();
  } catch (const json::exception& e) {
    throw ParseError(what + ": " + e.what(), 0);
  }
}

Eigen::VectorXd vector_from(const json& arr, const char* key) {
  if (!arr.is_array()) throw ParseError(std::string("\"") + key + "\" must be an array", 0);
  Eigen::VectorXd v(Eigen::Index(arr.size()));
  for (std::size_t i = 0; i < arr.size(); ++i) {
    if (!arr[i].is_number())
      throw ParseError(std::string("\"") + key + "\"[" + std::to_string(i) + "] is not a number", 0);
    v[Eigen::Index(i)] = arr[i].get<double>();
  }
  return v;
}

std::vector<double> to_vector(const Eigen::VectorXd& v) {
  return std::vector<double>(v.data(), v.data() + v.size());
}

}  // namespace

json parse_json(std::string_view text, const std::string& source) {
  try {
    return json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    const std::size_t line = line_of(text, e.byte > 0 ? e.byte - 1 : 0);
    throw ParseError(source + ":" + std::to_string(line) + ": " + e.what(), line);
  }
}

json read_json_file(const fs::path& path) { return parse_json(read_file(path), path.string()); }

json to_json(const SpectrumD& spec, const NoiseProfileD* noise) {
  json j;
  j["lambdas"] = to_vector(spec.lambdas());
  j["k"] = spec.k();
  if (noise) {
    j["kappa2"] = to_vector(noise->kappa2());
    j["s_min"] = noise->s_min();
    j["s_max"] = noise->s_max();
  }
  return j;
}

SpectrumD spectrum_from_json(const json& j) {
  if (!j.is_object() || !j.contains("lambdas") || !j.contains("k"))
    throw ParseError("spectrum document needs \"lambdas\" and \"k\"", 0);
  const auto k = schema("spectrum \"k\"", [&] { return j.at("k").get<Eigen::Index>(); });
  return SpectrumD(vector_from(j.at("lambdas"), "lambdas"), k);
}

NoiseProfileD noise_from_json(const json& j) {
  if (!j.is_object() || !j.contains("kappa2"))
    throw ParseError("noise document needs \"kappa2\"", 0);
  Eigen::VectorXd kappa2 = vector_from(j.at("kappa2"), "kappa2");
  if (j.contains("s_min") || j.contains("s_max")) {
    if (kappa2.size() == 0) throw ParameterError("noise profile is empty");
    const double lo = schema("noise \"s_min\"", [&] {
      return j.contains("s_min") ? j.at("s_min").get<double>() : kappa2.minCoeff();
    });
    const double hi = schema("noise \"s_max\"", [&] {
      return j.contains("s_max") ? j.at("s_max").get<double>() : kappa2.maxCoeff();
    });
    return NoiseProfileD(std::move(kappa2), lo, hi);
  }
  return NoiseProfileD(std::move(kappa2));
}

json to_json(const StateD& x) {
  json j;
  j["t"] = x.t;
  j["c"] = to_vector(x.c);
  return j;
}

StateD state_from_json(const json& j) {
  if (!j.is_object() || !j.contains("c")) throw ParseError("state document needs \"c\"", 0);
  const std::int64_t t =
      j.contains("t") ? schema("state \"t\"", [&] { return j.at("t").get<std::int64_t>(); }) : 0;
  Eigen::VectorXd c = vector_from(j.at("c"), "c");
  for (Eigen::Index i = 0; i < c.size(); ++i)
    if (!std::isfinite(c[i])) throw ParseError("state has non-finite coordinates", 0);
  return StateD(std::move(c), t);
}

std::string eigenvalues_csv(const SpectrumD& spec) {
  std::string out = "index,lambda,block\n";
  for (Eigen::Index i = 0; i < spec.dim(); ++i) {
    out += std::to_string(i + 1);
    out += ',';
    out += format_number(spec.lambdas()[i]);
    out += i < spec.k() ? ",D\n" : ",B\n";
  }
  return out;
}

std::string state_csv(const StateD& x) {
  std::string out = "index,c\n";
  for (Eigen::Index i = 0; i < x.dim(); ++i) {
    out += std::to_string(i + 1);
    out += ',';
    out += format_number(x.c[i]);
    out += '\n';
  }
  return out;
}

StateD parse_state_csv(std::string_view text, const std::string& source) {
  std::vector<double> values;
  std::size_t line = 0, pos = 0;
  bool header = false;
  while (pos < text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view row = text.substr(pos, end - pos);
    pos = end + 1;
    ++line;
    if (!row.empty() && row.back() == '\r') row.remove_suffix(1);
    if (row.empty()) continue;
    auto fail = [&](const std::string& msg) {
      return ParseError(source + ":" + std::to_string(line) + ": " + msg, line);
    };
    if (!header) {
      if (row != "index,c") throw fail("expected header \"index,c\"");
      header = true;
      continue;
    }
    const std::size_t comma = row.find(',');
    if (comma == std::string_view::npos) throw fail("expected two columns");
    long long idx = 0;
    const auto ri = std::from_chars(row.data(), row.data() + comma, idx);
    if (ri.ec != std::errc() || ri.ptr != row.data() + comma)
      throw fail("index is not an integer");
    if (idx != static_cast<long long>(values.size()) + 1)
      throw fail("indices must run 1, 2, ... in order");
    double v = 0;
    const char* first = row.data() + comma + 1;
    const char* last = row.data() + row.size();
    const auto rv = std::from_chars(first, last, v);
    if (rv.ec != std::errc() || rv.ptr != last || !std::isfinite(v))
      throw fail("coordinate is not a finite number");
    values.push_back(v);
  }
  if (!header) throw ParseError(source + ": empty state file", 0);
  if (values.empty()) throw ParseError(source + ": state file has no rows", 0);
  return StateD(Eigen::Map<const Eigen::VectorXd>(values.data(), Eigen::Index(values.size())), 0);
}

StateD read_state(const fs::path& path) {
  if (path.extension() == ".csv") return parse_state_csv(read_file(path), path.string());
  return state_from_json(read_json_file(path));
}

std::string trajectory_csv(const TrajectoryRecord& traj) {
  const bool blocks = traj.has_block_energies();
  std::string out = blocks ? "step,theta,loss,sD,sB\n" : "step,theta,loss\n";
  for (std::size_t i = 0; i < traj.size(); ++i) {
    out += std::to_string(traj.times[i]);
    out += ',';
    out += format_number(traj.thetas[i]);
    out += ',';
    out += format_number(traj.losses[i]);
    if (blocks) {
      out += ',';
      out += format_number(traj.sD[i]);
      out += ',';
      out += format_number(traj.sB[i]);
    }
    out += '\n';
  }
  return out;
}

std::string verdict_csv(const std::vector<VerdictRow>& rows) {
  std::string out = "test,theta,eta,eta_star,predicted,mean,stderr,z,verdict\n";
  for (const auto& r : rows) {
    const DriftVerdict& v = r.verdict;
    out += r.test + ',' + format_number(r.theta) + ',' + format_number(r.eta) + ',' +
           format_number(r.eta_star) + ',' + sign_symbol(v.predicted_sign) + ',' +
           format_number(v.estimate.mean) + ',' + format_number(v.estimate.std_error) + ',' +
           format_number(v.z) + ',' + verdict_name(v.verdict) + '\n';
  }
  return out;
}

}  // namespace alignlab::io
