#pragma once

#include "diffcd/field.hpp"
#include "diffcd/nearest_neighbor.hpp"
#include "diffcd/rng.hpp"
#include "diffcd/sampler.hpp"
#include "diffcd/types.hpp"

#include <map>
#include <string>

namespace diffcd {

enum class LossVariant { IGR, SIREN, NeuralPull, DiffCD };

std::string to_string(LossVariant v);
LossVariant parse_loss_variant(const std::string& name);

struct LossConfig {
    LossVariant variant = LossVariant::DiffCD;
    double eikonal_weight = 0.1;   // λ
    double ssa_weight = 0.033;     // μ, rescaled: the penalty is μ · mean(exp(-α|f|))
    double ssa_sharpness = 100.0;  // α
    SamplingConfig sampling;
    BoundingBox domain = BoundingBox::unit(3);

    void validate() const;
    /// The configured weighted sum of named components.
    double combine(const std::map<std::string, double>& components) const;
};

/// One loss term and, when requested, its gradient over θ.
struct TermValue {
    double value = 0.0;
    Vector gradient;          // empty when the gradient was not requested
    std::size_t skipped = 0;  // samples dropped for a vanishing gradient
};

// Every term takes `with_gradient`; it requires a field with parameters.

/// mean (‖∇f‖ - 1)². Samples with ‖∇f‖ < 1e-8 contribute 1 and no gradient.
TermValue eikonal_loss(const ScalarField& field, const Points& samples, bool with_gradient = true);

/// mean |f(x̃)| over the cloud batch.
TermValue data_term(const ScalarField& field, const Points& batch, bool with_gradient = true);

/// mean exp(-α|f|) over the given samples (the composite SSA penalty before μ).
TermValue ssa_mean(const ScalarField& field, const Points& samples, double alpha,
                   bool with_gradient = true);

/// (|Ω|/K)(α/2) Σ exp(-α|f(x_k)|) over K uniform samples of Ω.
TermValue ssa_loss(const ScalarField& field, const BoundingBox& domain, double alpha,
                   std::size_t K, Rng& rng, bool with_gradient = false);
TermValue ssa_loss(const ScalarField& field, const BoundingBox& domain, double alpha,
                   const Points& samples, bool with_gradient = false);

/// x - f ∇f/‖∇f‖. Throws NumericalError when ‖∇f‖ < 1e-8.
Vector pull(const ScalarField& field, const Vector& x);

/// mean ‖closest_P(x_s) - pull(x_s)‖. The closest cloud point is held fixed.
TermValue neural_pull_loss(const ScalarField& field, const NearestNeighborIndex& cloud,
                           const Points& samples, bool with_gradient = true);

/// mean distance from level-set samples to the cloud, differentiated through the
/// minimum-norm implied motion ∇_θx = -g f_θᵀ / ‖g‖². Throws InputError when the
/// sample set is empty.
TermValue surface_to_points_term(const ScalarField& field, const Points& samples,
                                 const NearestNeighborIndex& cloud, bool with_gradient = true);

/// ∇_θ x for a level-set point x as a dim x d_θ matrix: -g f_θᵀ / ‖g‖².
Eigen::MatrixXd level_set_point_jacobian(const ScalarField& field, const Vector& x);

/// Sample sets consumed by composite_loss. Unused sets may stay null.
struct LossInputs {
    const Points* cloud_batch = nullptr;      // data term
    const Points* eikonal_samples = nullptr;  // IGR, SIREN, DiffCD
    const Points* ssa_samples = nullptr;      // SIREN
    const Points* surface_samples = nullptr;  // DiffCD
    const Points* local_samples = nullptr;    // Neural-Pull
    const NearestNeighborIndex* cloud_index = nullptr;  // Neural-Pull, DiffCD
};

struct LossValue {
    double total = 0.0;
    std::map<std::string, double> components;
    Vector gradient;
    std::size_t eikonal_skipped = 0;
};

/// IGR: data + λ eik. SIREN: data + λ eik + μ ssa. DiffCD: ½(data + s2p) + λ eik.
/// NeuralPull: neural_pull alone. Throws NumericalError naming the first
/// component whose value or gradient is non-finite.
LossValue composite_loss(const ScalarField& field, const LossInputs& inputs, const LossConfig& cfg,
                         bool with_gradient = true);

}  // namespace diffcd
