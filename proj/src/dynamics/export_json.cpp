#include <json.hpp>
#include <ostream>

#include "cocontact/dynamics/dynamics.hpp"

namespace cocontact::dynamics {

namespace {

nlohmann::json channel(const ChannelSummary& c) { return {{"max", c.max}, {"rms", c.rms}}; }

}  // namespace

void write_json(std::ostream& out, const Trajectory& traj, const ResidualReport& report) {
  nlohmann::json doc;
  doc["n"] = traj.n;
  if (traj.ladder) {
    auto& ladder = doc["ladder"];
    ladder["generations"] = traj.ladder->generations();
    ladder["rank"] = traj.ladder->pivots.size();
    ladder["kernel_dim"] = traj.n - static_cast<int>(traj.ladder->pivots.size());
    for (const auto& c : traj.ladder->constraints)
      ladder["constraints"].push_back({{"label", c.label}, {"generation", c.generation}, {"origin", c.origin}});
  }
  doc["newton_iterations"] = traj.newton_iterations;
  doc["residuals"] = {{"holonomy", channel(report.holonomy)},
                      {"sdot", channel(report.sdot)},
                      {"herglotz", channel(report.herglotz)},
                      {"constraint", channel(report.constraint)}};
  auto& samples = doc["samples"];
  samples = nlohmann::json::array();
  for (std::size_t k = 0; k < traj.points.size(); ++k) {
    const auto& p = traj.points[k];
    nlohmann::json row{{"t", p.t}, {"q", p.q}, {"v", p.v}, {"p", p.p}, {"s", p.s}};
    if (k < traj.Z.size()) {
      const auto& Z = traj.Z[k];
      row["Z"] = {{"A", Z.A}, {"B", Z.B}, {"C", Z.C}, {"D", Z.D}, {"E", Z.E}};
    }
    if (k < traj.residuals.size()) {
      const auto& r = traj.residuals[k];
      row["residuals"] = {
          {"holonomy", r.holonomy}, {"sdot", r.sdot}, {"herglotz", r.herglotz}, {"constraint", r.constraint}};
    }
    samples.push_back(std::move(row));
  }
  out << doc.dump(1) << '\n';
}

}  // namespace cocontact::dynamics
