#include "fmmbem/bem/report.hpp"

#include <ostream>
#include <string>

#include "fmmbem/errors.hpp"

namespace fmmbem::bem {

nlohmann::json solve_report(const SolveResult& r, std::size_t n_panels, std::size_t n_charges, int order_p) {
  nlohmann::json j;
  j["method"] = std::string(method_name(r.method));
  j["n_panels"] = n_panels;
  j["n_charges"] = n_charges;
  j["eps_in"] = r.dielectric.eps_in;
  j["eps_out"] = r.dielectric.eps_out;
  j["order_p"] = order_p;
  j["f"] = r.f;
  j["iterations"] = r.iterations;
  j["residuals"] = r.residuals;
  j["dG_internal"] = r.dG_internal;
  j["dG_kcal_mol"] = r.dG_kcal_mol;
  j["timings"] = {{"tree", r.timings.tree},
                  {"upward", r.timings.upward},
                  {"m2l", r.timings.m2l},
                  {"p2p", r.timings.p2p},
                  {"total", r.timings.total}};
  j["converged"] = r.converged;
  return j;
}

void write_sigma_csv(std::ostream& out, const geom::PanelSet& panels, std::span<const double> sigma) {
  if (sigma.size() != panels.size()) throw InputError("sigma CSV: one density per panel expected");
  const auto old = out.precision(17);
  out << "panel_index,cx,cy,cz,area,sigma\n";
  for (std::size_t i = 0; i < sigma.size(); ++i) {
    const Vec3& c = panels.centroid[i];
    out << i << ',' << c.x << ',' << c.y << ',' << c.z << ',' << panels.area[i] << ',' << sigma[i] << '\n';
  }
  out.precision(old);
}

}  // namespace fmmbem::bem
