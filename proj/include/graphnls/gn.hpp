#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "graphnls/mesh.hpp"
#include "graphnls/rearrangement.hpp"

namespace graphnls {

enum class GnMode { tip, no_tip };

std::string to_string(GnMode mode);
/// Half-line critical mass for `tip`, line critical mass for `no_tip`.
double mode_threshold(GnMode mode);
GnMode mode_for(const MetricGraph& graph);

/// ||u||_p^p / (||u||_2^{p/2+1} ||u||_{H1}^{p/2-1}); a lower bound for the
/// optimal compact constant K_G.
double gn_ratio_compact(const GraphFunction& u, double p);

/// ||u||_6^6 / (||u||_2^4 ||u'||_2^2). Saturates at 4/pi^2 on the line and
/// 16/pi^2 on the half-line.
double gn_ratio_critical(const GraphFunction& u);
double gn_ratio_critical(const Profile& f);

/// Zero-extends a profile to the real line, closing any nonzero end with a
/// linear ramp of length `ramp` so the result is in H1(R).
Profile transplant_to_line(const Profile& f, double ramp);

struct ThetaResult {
  bool feasible = false;
  double theta = 0.0;  // meaningful only when feasible
  double constant = 0.0;
  GnMode mode = GnMode::tip;
  double slack = 0.0;  // RHS - ||u||_6^6 at theta (or at the best theta if infeasible)
  double mass = 0.0;

  nlohmann::json to_json() const;
};

/// Norms entering the modified inequality, precomputed so that theta searches
/// over many constants stay cheap.
struct GnNorms {
  double mass = 0.0;
  double l6 = 0.0;        // ||u||_6^6
  double dirichlet = 0.0; // ||u'||_2^2
};

GnNorms gn_norms(const GraphFunction& u);

/// Smallest theta in [0, mu] with
///   ||u||_6^6 <= 3 ((mu - theta) / mu_c)^2 ||u'||^2 + C sqrt(theta),
/// bisected to 1e-10 * mu, or infeasible.
ThetaResult theta_min(const GraphFunction& u, double constant, GnMode mode);
ThetaResult theta_min(const GnNorms& norms, double constant, GnMode mode);

/// Smallest C making theta_min feasible for this single function.
double required_constant(const GnNorms& norms, GnMode mode);

/// Deterministic pseudo-random family: per-edge truncated Fourier series made
/// vertex-continuous by endpoint averaging. Member masses are spread over
/// (0, max_mass]; a zero `max_mass` keeps the unit-mass normalisation.
std::vector<GraphFunction> random_family(const MeshPtr& mesh, std::size_t count, std::uint64_t seed,
                                         double max_mass, int modes = 6);

/// One member of the family, normalised to mass `target_mass`.
GraphFunction random_function(const MeshPtr& mesh, std::uint64_t seed, double target_mass, int modes = 6);

struct ConstantEstimate {
  double constant = 0.0;
  std::size_t witness = 0;  // index of the binding family member
  std::size_t samples = 0;
  std::uint64_t seed = 0;
  GnMode mode = GnMode::tip;

  nlohmann::json to_json() const;
};

/// Smallest C (relative tolerance 1e-6) admitting a feasible theta for every
/// member of the given family.
ConstantEstimate estimate_constant(const std::vector<GraphFunction>& family, GnMode mode);

/// Same, for the seeded random family of the given size on mesh.
ConstantEstimate estimate_constant(const MeshPtr& mesh, GnMode mode, std::size_t sample_budget,
                                   std::uint64_t seed);

}  // namespace graphnls
