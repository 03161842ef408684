#pragma once

// Sorting a fitness landscape into the regimes for which crossing rates are
// available: a strict valley (every interior trait unfit in every phase) or a
// two-phase valley with a single pit-stop trait.

#include <cmath>
#include <cstddef>
#include <string>

#include "valley/fitness.hpp"
#include "valley/model.hpp"

namespace valley {

enum class Regime { StrictValley, Pitstop, Unsupported };

struct Classification {
  Regime regime = Regime::Unsupported;
  std::size_t pitstop_trait = 0;  // meaningful for Regime::Pitstop
  std::string reason;             // first failed clause for Unsupported

  bool strict() const { return regime == Regime::StrictValley; }
  bool pitstop() const { return regime == Regime::Pitstop; }
};

inline const char* to_string(Regime r) {
  switch (r) {
    case Regime::StrictValley: return "strict_valley";
    case Regime::Pitstop: return "pitstop";
    case Regime::Unsupported: return "unsupported";
  }
  return "unknown";
}

namespace detail {

inline Classification unsupported(std::string why) {
  return {Regime::Unsupported, 0, std::move(why)};
}

// Invasion clauses shared by both regimes: L never critical, and whenever L
// is fit the resident cannot re-invade it.
inline std::string check_invasion(const FitnessTable& t, std::size_t L) {
  for (std::size_t i = 0; i < t.phase_count(); ++i) {
    const double fl = t.at(i, L, 0);
    if (fl == 0.0) return "f_L0 must be non-zero in every phase";
    if (fl > 0.0) {
      if (!t.defined(i, 0, L)) return "nbar_L must be positive when L is fit";
      if (!(t.at(i, 0, L) < 0.0)) return "f_0L must be negative whenever f_L0 > 0";
    }
  }
  return {};
}

}  // namespace detail

inline Classification classify_landscape(const ModelSpec& model, const FitnessTable& t,
                                         double alpha) {
  const std::size_t L = model.num_traits;
  const std::size_t ell = t.phase_count();
  const auto depth = static_cast<std::size_t>(std::floor(alpha));

  if (!model.has_default_kernel())
    return detail::unsupported("rates require the forward nearest-neighbour kernel");
  if (depth >= L) return detail::unsupported("floor(alpha) must be below L");
  for (std::size_t i = 0; i < ell; ++i)
    if (!(t.equilibria[i][0] > 0.0)) return detail::unsupported("nbar_0 must be positive in every phase");

  bool interior_all_unfit = true;
  for (std::size_t w = 1; w < L; ++w)
    for (std::size_t i = 0; i < ell; ++i) interior_all_unfit = interior_all_unfit && t.at(i, w, 0) < 0.0;

  if (interior_all_unfit) {
    if (!(t.avg(L) > 0.0)) return detail::unsupported("average fitness of L must be positive");
    if (auto why = detail::check_invasion(t, L); !why.empty()) return detail::unsupported(why);
    return {Regime::StrictValley, 0, {}};
  }

  // Pit-stop clauses, in order.
  if (ell != 2) return detail::unsupported("pitstop requires ell=2");
  const double n1 = t.equilibria[0][0], n2 = t.equilibria[1][0];
  if (std::abs(n1 - n2) > 1e-12 * std::max(std::abs(n1), std::abs(n2)))
    return detail::unsupported("pitstop requires equal resident equilibria");

  std::size_t candidate = 0;
  int found = 0;
  for (std::size_t w = 1; w < L; ++w) {
    const bool fit_somewhere = t.at(0, w, 0) >= 0.0 || t.at(1, w, 0) >= 0.0;
    if (!fit_somewhere) continue;
    if (w <= depth) return detail::unsupported("mesoscopic traits must be unfit in every phase");
    if (!(t.at(0, w, 0) > 0.0 && t.at(1, w, 0) < 0.0 && t.avg(w) < 0.0))
      return detail::unsupported("pitstop trait must be fit in phase 1 only with negative average");
    candidate = w;
    ++found;
  }
  if (found != 1) return detail::unsupported("pitstop requires a unique fit interior trait");
  for (std::size_t i = 0; i < ell; ++i)
    if (!(t.at(i, L, 0) > 0.0)) return detail::unsupported("pitstop requires L fit in both phases");
  if (auto why = detail::check_invasion(t, L); !why.empty()) return detail::unsupported(why);
  return {Regime::Pitstop, candidate, {}};
}

inline Classification classify_landscape(const ModelSpec& model, const ScalingSpec& scaling) {
  return classify_landscape(model, compute_fitness_table(model), scaling.alpha);
}

}  // namespace valley
