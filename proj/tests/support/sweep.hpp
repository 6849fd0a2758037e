#pragma once

// Forward-backward sweep load flow on the branch-flow equations of a radial
// feeder. Independent of the conic model: it iterates the exact equations
// instead of relaxing them.

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <vector>

#include "pvm/netmodel.hpp"

namespace pvm::testing {

struct SweepResult {
  std::vector<double> v_sq;  // per bus index
  std::vector<double> l;     // per branch index
  std::vector<double> p, q;
  double losses = 0.0;
};

/// p_pu / q_pu: net demand per bus index (p.u.), positive = consumption.
inline SweepResult sweep_power_flow(const Network& net, const std::vector<double>& p_pu,
                                    const std::vector<double>& q_pu, double v_slack, int max_iter = 500) {
  const std::size_t nb = net.bus_count(), nl = net.branch_count();
  std::vector<std::size_t> order(nb);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return net.depth(a) < net.depth(b); });
  SweepResult s;
  s.v_sq.assign(nb, v_slack * v_slack);
  s.l.assign(nl, 0.0);
  s.p.assign(nl, 0.0);
  s.q.assign(nl, 0.0);
  for (int it = 0; it < max_iter; ++it) {
    // backward: downstream demand plus branch losses
    for (auto bi = order.rbegin(); bi != order.rend(); ++bi) {
      const std::size_t i = *bi;
      const auto up = net.parent_branch(i);
      if (!up) continue;
      double p = p_pu[i], q = q_pu[i];
      for (std::size_t k : net.child_branches(i)) {
        p += s.p[k];
        q += s.q[k];
      }
      const Branch& br = net.branches()[*up];
      p += br.r * s.l[*up];
      q += br.x * s.l[*up];
      s.p[*up] = p;
      s.q[*up] = q;
    }
    // forward: voltages and currents
    double change = 0.0;
    for (std::size_t i : order) {
      const auto up = net.parent_branch(i);
      if (!up) continue;
      const Branch& br = net.branches()[*up];
      const std::size_t from = net.branch_from(*up);
      const double l = (s.p[*up] * s.p[*up] + s.q[*up] * s.q[*up]) / s.v_sq[from];
      const double v = s.v_sq[from] - 2.0 * (br.r * s.p[*up] + br.x * s.q[*up]) + (br.r * br.r + br.x * br.x) * l;
      change = std::max({change, std::fabs(v - s.v_sq[i]), std::fabs(l - s.l[*up])});
      s.v_sq[i] = v;
      s.l[*up] = l;
    }
    if (change < 1e-15) break;
    if (it + 1 == max_iter) throw std::runtime_error("sweep did not converge");
  }
  s.losses = 0.0;
  for (std::size_t k = 0; k < nl; ++k) s.losses += net.branches()[k].r * s.l[k];
  return s;
}

/// Net demand of hour t in p.u. per bus index.
inline void hour_demand(const Network& net, const LoadProfileSet& prof, std::size_t t, std::vector<double>& p,
                        std::vector<double>& q) {
  p.assign(net.bus_count(), 0.0);
  q.assign(net.bus_count(), 0.0);
  for (std::size_t i = 0; i < net.bus_count(); ++i) {
    const BusId id = net.buses()[i].id;
    if (!prof.has(id)) continue;
    p[i] = prof.p_at(id, t) / net.s_base_kw();
    q[i] = prof.q_at(id, t) / net.s_base_kw();
  }
}

}  // namespace pvm::testing
