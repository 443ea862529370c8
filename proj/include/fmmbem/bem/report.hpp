#pragma once

#include <iosfwd>
#include <span>

#include <json.hpp>

#include "fmmbem/bem/solver.hpp"

namespace fmmbem::bem {

/// Solve report: method, n_panels, n_charges, eps_in, eps_out, order_p, f,
/// iterations, residuals, dG_internal, dG_kcal_mol, timings, converged.
nlohmann::json solve_report(const SolveResult& result, std::size_t n_panels, std::size_t n_charges, int order_p);

/// CSV with header `panel_index,cx,cy,cz,area,sigma`, full precision.
void write_sigma_csv(std::ostream& out, const geom::PanelSet& panels, std::span<const double> sigma);

}  // namespace fmmbem::bem
