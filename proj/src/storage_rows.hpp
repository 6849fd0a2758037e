#pragma once

// Storage rows shared by the planning and the operating models.

#include "pvm/oep.hpp"

namespace pvm::detail {

inline VoltageLimits with_margin(VoltageLimits limits) {
  limits.lower += kLimitMargin;
  limits.upper -= kLimitMargin;
  return limits;
}

/// Adds one hour of charge/discharge/reactive/SOC variables to `u`.
/// `cap` is the capacity (kWh) as an expression, `cap_max` its upper bound,
/// `gate` the on/off term the direction binaries share (z, or 1).
void add_unit_hour(conic::ConicProgram& prog, BessUnit& u, const BessSpec& spec, const conic::LinExpr& cap,
                   double cap_max, const conic::LinExpr& gate);

/// SOC dynamics over slots [first, first + count) of `u`, cyclic, with the
/// state before the first hour pinned to soc_initial * cap.
void add_soc_chain(conic::ConicProgram& prog, const BessUnit& u, const BessSpec& spec, const conic::LinExpr& cap,
                   std::size_t first, std::size_t count);

/// Storage terms of slot `k` on the load side of the host bus balance (p.u.).
void add_to_balance(BalanceExtras& extras, const BessUnit& u, std::size_t k, double s_base_kw,
                    std::size_t bus_count);

/// Reads slot values of `u` into `site` (appending).
void read_slots(const BessUnit& u, const std::vector<double>& x, std::size_t first, std::size_t count,
                SitePlan& site);

}  // namespace pvm::detail
