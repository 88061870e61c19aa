#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "pepakit/io.hpp"

namespace pepakit::io {

using nlohmann::ordered_json;

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  std::array<char, 32> buf{};
  auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return std::string(buf.data(), ptr);
}

namespace {

std::string header(const DerivativeTable& table, const char* first) {
  std::string out = first;
  for (const auto& d : table.derivatives()) out += "," + d.name;
  return out + "\n";
}

ordered_json rate_json(const RateValue& r) {
  if (r.is_passive()) return "infty";
  return r.value();
}

}  // namespace

std::string derivatives_text(const DerivativeTable& table) {
  std::string out;
  for (const auto& t : table.types()) {
    out += t.name + "[" + std::to_string(t.population) + "]:";
    for (std::size_t i = t.first; i < t.first + t.size; ++i) out += " " + table[i].name;
    out += "\n";
  }
  return out;
}

std::string matrix_csv(const ActivityMatrices& m, const IntMatrix& which) {
  std::string out = "derivative";
  for (const auto& a : m.activities) out += "," + a.display_name;
  out += "\n";
  for (std::size_t i = 0; i < which.rows(); ++i) {
    out += m.derivatives[i].name;
    for (std::size_t j = 0; j < which.cols(); ++j) out += "," + std::to_string(which(i, j));
    out += "\n";
  }
  return out;
}

std::string rates_json(const ActivityMatrices& m, const RateSpec& spec) {
  ordered_json root = ordered_json::array();
  for (std::size_t j = 0; j < m.activities.size(); ++j) {
    const auto& a = m.activities[j];
    ordered_json entry;
    entry["label"] = a.display_name;
    entry["action"] = a.action.display();
    entry["kind"] = a.kind == ActivityKind::Shared ? "shared" : "individual";
    ordered_json parts = ordered_json::array();
    for (std::size_t k = 0; k < a.label.size(); ++k) {
      const auto& p = spec.activities[j][k];
      ordered_json part;
      part["pre"] = m.derivatives[a.label[k].pre].name;
      part["post"] = m.derivatives[a.label[k].post].name;
      part["rate"] = rate_json(p.branch);
      part["apparent"] = rate_json(p.total);
      part["branches"] = p.branches;
      parts.push_back(std::move(part));
    }
    entry["participants"] = std::move(parts);
    root.push_back(std::move(entry));
  }
  return root.dump(2) + "\n";
}

std::string states_csv(const DerivativeTable& table, const TransitionSystem& ts) {
  std::string out = header(table, "index");
  for (std::size_t s = 0; s < ts.states.size(); ++s) {
    out += std::to_string(s);
    for (auto v : ts.states[s]) out += "," + std::to_string(v);
    out += "\n";
  }
  return out;
}

std::string edges_csv(const ActivityMatrices& m, const TransitionSystem& ts) {
  std::string out = "src,label,rate,dst\n";
  for (const auto& e : ts.edges) {
    out += std::to_string(e.src) + "," + m.activities[e.activity].display_name + "," +
           format_double(e.rate) + "," + std::to_string(e.dst) + "\n";
  }
  return out;
}

std::string pi_csv(const std::vector<double>& pi) {
  std::string out = "state,probability\n";
  for (std::size_t s = 0; s < pi.size(); ++s)
    out += std::to_string(s) + "," + format_double(pi[s]) + "\n";
  return out;
}

std::string transient_csv(const TransientResult& r) {
  std::string out = "t";
  const std::size_t n = r.distributions.empty() ? 0 : r.distributions.front().size();
  for (std::size_t s = 0; s < n; ++s) out += ",s" + std::to_string(s);
  out += "\n";
  for (std::size_t k = 0; k < r.times.size(); ++k) {
    out += format_double(r.times[k]);
    for (double p : r.distributions[k]) out += "," + format_double(p);
    out += "\n";
  }
  return out;
}

std::string trajectory_csv(const DerivativeTable& table, const std::vector<TrajectorySample>& t) {
  std::string out = header(table, "t");
  for (const auto& row : t) {
    out += format_double(row.t);
    for (auto v : row.x) out += "," + std::to_string(v);
    out += "\n";
  }
  return out;
}

std::string results_json(const std::vector<RewardSpec>& rewards, const ReplicationSummary& s,
                         std::uint64_t seed) {
  ordered_json root = ordered_json::object();
  double t_total = 0.0;
  for (const auto& run : s.runs) t_total += run.total_time;
  for (std::size_t r = 0; r < rewards.size(); ++r) {
    ordered_json entry;
    entry["mean"] = s.mean[r];
    entry["stddev"] = s.stddev[r];
    entry["n"] = s.runs.size();
    entry["t_total"] = t_total;
    entry["seed"] = seed;
    root[rewards[r].name] = std::move(entry);
  }
  return root.dump(2) + "\n";
}

std::string ode_csv(const DerivativeTable& table, const OdeTrajectory& t) {
  std::string out = header(table, "t");
  for (std::size_t k = 0; k < t.times.size(); ++k) {
    out += format_double(t.times[k]);
    for (double v : t.values[k]) out += "," + format_double(v);
    out += "\n";
  }
  return out;
}

std::string kurtz_json(const std::vector<KurtzRow>& rows) {
  ordered_json root = ordered_json::object();
  for (const auto& r : rows) {
    ordered_json entry;
    entry["mean_sup_error"] = r.mean_sup_error;
    entry["stddev"] = r.stddev;
    entry["replications"] = r.replications;
    root[std::to_string(r.n)] = std::move(entry);
  }
  return root.dump(2) + "\n";
}

std::string net_json(const PTSystem& net) {
  ordered_json root;
  ordered_json places = ordered_json::array();
  for (const auto& p : net.places) places.push_back(p.name);
  ordered_json transitions = ordered_json::array();
  for (const auto& t : net.transitions) transitions.push_back(t.display_name);
  auto rows = [](const IntMatrix& m) {
    ordered_json out = ordered_json::array();
    for (std::size_t i = 0; i < m.rows(); ++i) {
      ordered_json row = ordered_json::array();
      for (std::size_t j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
      out.push_back(std::move(row));
    }
    return out;
  };
  root["places"] = std::move(places);
  root["transitions"] = std::move(transitions);
  root["pre"] = rows(net.pre);
  root["post"] = rows(net.post);
  root["m0"] = net.m0;
  return root.dump(2) + "\n";
}

std::string invariants_csv(const PTSystem& net, const std::vector<PInvariant>& invs) {
  std::string out;
  for (std::size_t p = 0; p < net.places.size(); ++p) out += net.places[p].name + ",";
  out += "value\n";
  for (const auto& inv : invs) {
    for (auto v : inv.y) out += std::to_string(v) + ",";
    out += std::to_string(inv.value) + "\n";
  }
  return out;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::filesystem::path& path, const std::string& contents) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << contents;
  if (!out) throw std::runtime_error("write failed for " + path.string());
}

}  // namespace pepakit::io
