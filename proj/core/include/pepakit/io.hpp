#pragma once

// Text formats for every artifact the toolkit writes. All writers return the
// full file contents; LF line endings, shortest round-trip doubles.

#include <filesystem>
#include <string>
#include <vector>

#include "pepakit/derivation.hpp"
#include "pepakit/fluid.hpp"
#include "pepakit/ptnet.hpp"
#include "pepakit/simulate.hpp"
#include "pepakit/statespace.hpp"

namespace pepakit::io {

/// Shortest representation that parses back to the same double.
std::string format_double(double v);

std::string derivatives_text(const DerivativeTable& table);

std::string matrix_csv(const ActivityMatrices& m, const IntMatrix& which);
std::string rates_json(const ActivityMatrices& m, const RateSpec& spec);

std::string states_csv(const DerivativeTable& table, const TransitionSystem& ts);
std::string edges_csv(const ActivityMatrices& m, const TransitionSystem& ts);
std::string pi_csv(const std::vector<double>& pi);
std::string transient_csv(const TransientResult& r);

std::string trajectory_csv(const DerivativeTable& table, const std::vector<TrajectorySample>& t);
std::string results_json(const std::vector<RewardSpec>& rewards, const ReplicationSummary& s,
                         std::uint64_t seed);

std::string ode_csv(const DerivativeTable& table, const OdeTrajectory& t);
std::string kurtz_json(const std::vector<KurtzRow>& rows);

std::string net_json(const PTSystem& net);
std::string invariants_csv(const PTSystem& net, const std::vector<PInvariant>& invs);

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, const std::string& contents);

}  // namespace pepakit::io
