#include "diffcd/losses.hpp"

#include <cmath>

namespace diffcd {

namespace {

constexpr double kGradFloor = 1e-8;
constexpr double kResidualFloor = 1e-9;

double sign(double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); }

Vector zero_gradient(const ScalarField& field) {
    if (field.num_params() == 0) throw InputError("loss gradient requested for a field without parameters");
    return Vector::Zero(static_cast<Eigen::Index>(field.num_params()));
}

void require_nonempty(const Points& x, const char* what) {
    if (x.cols() == 0) throw InputError(std::string(what) + ": empty sample set");
}

}  // namespace

std::string to_string(LossVariant v) {
    switch (v) {
    case LossVariant::IGR: return "igr";
    case LossVariant::SIREN: return "siren";
    case LossVariant::NeuralPull: return "neural-pull";
    case LossVariant::DiffCD: return "diffcd";
    }
    return "unknown";
}

LossVariant parse_loss_variant(const std::string& name) {
    if (name == "igr") return LossVariant::IGR;
    if (name == "siren") return LossVariant::SIREN;
    if (name == "neural-pull" || name == "neuralpull") return LossVariant::NeuralPull;
    if (name == "diffcd") return LossVariant::DiffCD;
    throw InputError("unknown loss variant '" + name + "' (expected igr, siren, neural-pull, diffcd)");
}

void LossConfig::validate() const {
    if (!(eikonal_weight >= 0.0)) throw InputError("loss.lambda must be >= 0");
    if (!(ssa_weight >= 0.0)) throw InputError("loss.mu must be >= 0");
    if (!(ssa_sharpness > 0.0)) throw InputError("loss.alpha must be > 0");
    sampling.validate();
    domain.validate();
}

double LossConfig::combine(const std::map<std::string, double>& c) const {
    auto get = [&](const char* k) {
        const auto it = c.find(k);
        return it == c.end() ? 0.0 : it->second;
    };
    switch (variant) {
    case LossVariant::IGR: return get("data") + eikonal_weight * get("eikonal");
    case LossVariant::SIREN:
        return get("data") + eikonal_weight * get("eikonal") + ssa_weight * get("ssa");
    case LossVariant::NeuralPull: return get("neural_pull");
    case LossVariant::DiffCD:
        return 0.5 * (get("data") + get("surface_to_points")) + eikonal_weight * get("eikonal");
    }
    return 0.0;
}

TermValue eikonal_loss(const ScalarField& field, const Points& samples, bool with_gradient) {
    require_nonempty(samples, "eikonal_loss");
    Vector f;
    Points g;
    field.evaluate(samples, f, &g);
    const double inv_n = 1.0 / static_cast<double>(samples.cols());
    TermValue out;
    Points dirs = Points::Zero(samples.rows(), samples.cols());
    for (Eigen::Index j = 0; j < samples.cols(); ++j) {
        const double gn = g.col(j).norm();
        if (!(gn >= kGradFloor)) {
            out.value += 1.0;
            ++out.skipped;
            continue;
        }
        out.value += (gn - 1.0) * (gn - 1.0);
        dirs.col(j) = (2.0 * (gn - 1.0) * inv_n / gn) * g.col(j);
    }
    out.value *= inv_n;
    if (with_gradient) {
        out.gradient = zero_gradient(field);
        field.accumulate_param_grad(samples, nullptr, &dirs, out.gradient);
    }
    return out;
}

TermValue data_term(const ScalarField& field, const Points& batch, bool with_gradient) {
    require_nonempty(batch, "data_term");
    Vector f;
    field.evaluate(batch, f, nullptr);
    const double inv_n = 1.0 / static_cast<double>(batch.cols());
    TermValue out;
    Vector w(batch.cols());
    for (Eigen::Index j = 0; j < batch.cols(); ++j) {
        out.value += std::abs(f[j]);
        w[j] = sign(f[j]) * inv_n;
    }
    out.value *= inv_n;
    if (with_gradient) {
        out.gradient = zero_gradient(field);
        field.accumulate_param_grad(batch, &w, nullptr, out.gradient);
    }
    return out;
}

TermValue ssa_mean(const ScalarField& field, const Points& samples, double alpha, bool with_gradient) {
    require_nonempty(samples, "ssa");
    Vector f;
    field.evaluate(samples, f, nullptr);
    const double inv_n = 1.0 / static_cast<double>(samples.cols());
    TermValue out;
    Vector w(samples.cols());
    for (Eigen::Index j = 0; j < samples.cols(); ++j) {
        const double e = std::exp(-alpha * std::abs(f[j]));
        out.value += e;
        w[j] = -alpha * e * sign(f[j]) * inv_n;
    }
    out.value *= inv_n;
    if (with_gradient) {
        out.gradient = zero_gradient(field);
        field.accumulate_param_grad(samples, &w, nullptr, out.gradient);
    }
    return out;
}

TermValue ssa_loss(const ScalarField& field, const BoundingBox& domain, double alpha,
                   const Points& samples, bool with_gradient) {
    TermValue out = ssa_mean(field, samples, alpha, with_gradient);
    const double factor = domain.volume() * alpha / 2.0;
    out.value *= factor;
    if (with_gradient) out.gradient *= factor;
    return out;
}

TermValue ssa_loss(const ScalarField& field, const BoundingBox& domain, double alpha, std::size_t K,
                   Rng& rng, bool with_gradient) {
    if (K < 1) throw InputError("ssa_loss needs K >= 1");
    if (domain.dim() != field.dim()) throw InputError("ssa_loss: domain dimension mismatch");
    // Chunked so very large K does not materialize one huge sample matrix.
    constexpr std::size_t kChunk = 1 << 16;
    TermValue total;
    if (with_gradient) total.gradient = zero_gradient(field);
    for (std::size_t start = 0; start < K; start += kChunk) {
        const std::size_t len = std::min(kChunk, K - start);
        const Points x = uniform_in_box(domain, len, rng);
        const TermValue part = ssa_mean(field, x, alpha, with_gradient);
        const double share = static_cast<double>(len) / static_cast<double>(K);
        total.value += part.value * share;
        if (with_gradient) total.gradient += part.gradient * share;
    }
    const double factor = domain.volume() * alpha / 2.0;
    total.value *= factor;
    if (with_gradient) total.gradient *= factor;
    return total;
}

Vector pull(const ScalarField& field, const Vector& x) {
    Vector f;
    Points g;
    field.evaluate(Points(x), f, &g);
    const double gn = g.col(0).norm();
    if (!(gn >= kGradFloor)) throw NumericalError("pull: gradient norm below 1e-8");
    return x - (f[0] / gn) * g.col(0);
}

TermValue neural_pull_loss(const ScalarField& field, const NearestNeighborIndex& cloud,
                           const Points& samples, bool with_gradient) {
    require_nonempty(samples, "neural_pull_loss");
    require_dim(samples, cloud.dim(), "neural_pull_loss");
    Vector f;
    Points g;
    field.evaluate(samples, f, &g);
    const auto nearest = cloud.nearest_all(samples);
    const Eigen::Index n = samples.cols();

    TermValue out;
    Vector w = Vector::Zero(n);
    Points dirs = Points::Zero(samples.rows(), n);
    std::size_t count = 0;
    for (Eigen::Index j = 0; j < n; ++j) {
        const double gn = g.col(j).norm();
        if (!(gn >= kGradFloor)) {
            ++out.skipped;
            continue;
        }
        ++count;
        const Vector ghat = g.col(j) / gn;
        const Vector pulled = samples.col(j) - f[j] * ghat;
        const Vector r = pulled - cloud.points().col(nearest[j].index);
        const double rn = r.norm();
        out.value += rn;
        if (rn < kResidualFloor) continue;
        const Vector e = r / rn;
        const double eg = e.dot(ghat);
        w[j] = -eg;
        dirs.col(j) = -(f[j] / gn) * (e - eg * ghat);
    }
    if (count == 0) throw NumericalError("neural_pull_loss: every sample has a vanishing gradient");
    const double inv_n = 1.0 / static_cast<double>(count);
    out.value *= inv_n;
    if (with_gradient) {
        w *= inv_n;
        dirs *= inv_n;
        out.gradient = zero_gradient(field);
        field.accumulate_param_grad(samples, &w, &dirs, out.gradient);
    }
    return out;
}

TermValue surface_to_points_term(const ScalarField& field, const Points& samples,
                                 const NearestNeighborIndex& cloud, bool with_gradient) {
    require_nonempty(samples, "surface_to_points_term");
    require_dim(samples, cloud.dim(), "surface_to_points_term");
    const auto nearest = cloud.nearest_all(samples);
    const Eigen::Index n = samples.cols();
    TermValue out;
    for (Eigen::Index j = 0; j < n; ++j) out.value += nearest[j].distance;
    const double inv_n = 1.0 / static_cast<double>(n);
    out.value *= inv_n;
    if (!with_gradient) return out;

    Vector f;
    Points g;
    field.evaluate(samples, f, &g);
    Vector w = Vector::Zero(n);
    for (Eigen::Index j = 0; j < n; ++j) {
        const double gn2 = g.col(j).squaredNorm();
        if (!(gn2 >= kGradFloor * kGradFloor)) {
            ++out.skipped;
            continue;
        }
        const double rn = nearest[j].distance;
        if (rn < kResidualFloor) continue;
        const Vector r = samples.col(j) - cloud.points().col(nearest[j].index);
        w[j] = -r.dot(g.col(j)) / (rn * gn2) * inv_n;
    }
    out.gradient = zero_gradient(field);
    field.accumulate_param_grad(samples, &w, nullptr, out.gradient);
    return out;
}

Eigen::MatrixXd level_set_point_jacobian(const ScalarField& field, const Vector& x) {
    const Vector g = field.grad_x(x);
    const double gn2 = g.squaredNorm();
    if (!(gn2 >= kGradFloor * kGradFloor)) throw NumericalError("level_set_point_jacobian: vanishing gradient");
    const Vector ft = field.grad_theta(x);
    return -(g / gn2) * ft.transpose();
}

LossValue composite_loss(const ScalarField& field, const LossInputs& in, const LossConfig& cfg,
                         bool with_gradient) {
    auto need = [](const void* p, const char* what) {
        if (!p) throw InputError(std::string("composite loss is missing ") + what);
    };
    const bool eikonal = cfg.variant != LossVariant::NeuralPull;
    const bool data = cfg.variant != LossVariant::NeuralPull;
    if (data) need(in.cloud_batch, "the cloud batch");
    if (eikonal) need(in.eikonal_samples, "eikonal samples");
    if (cfg.variant == LossVariant::SIREN) need(in.ssa_samples, "SSA samples");
    if (cfg.variant == LossVariant::DiffCD) {
        need(in.surface_samples, "surface samples");
        need(in.cloud_index, "the cloud index");
    }
    if (cfg.variant == LossVariant::NeuralPull) {
        need(in.local_samples, "local samples");
        need(in.cloud_index, "the cloud index");
    }

    std::map<std::string, TermValue> terms;
    if (data) terms["data"] = data_term(field, *in.cloud_batch, with_gradient);
    if (eikonal) terms["eikonal"] = eikonal_loss(field, *in.eikonal_samples, with_gradient);
    if (cfg.variant == LossVariant::SIREN) {
        terms["ssa"] = ssa_mean(field, *in.ssa_samples, cfg.ssa_sharpness, with_gradient);
    }
    if (cfg.variant == LossVariant::DiffCD) {
        terms["surface_to_points"] =
            surface_to_points_term(field, *in.surface_samples, *in.cloud_index, with_gradient);
    }
    if (cfg.variant == LossVariant::NeuralPull) {
        terms["neural_pull"] = neural_pull_loss(field, *in.cloud_index, *in.local_samples, with_gradient);
    }

    LossValue out;
    for (const auto& [name, term] : terms) {
        if (!std::isfinite(term.value)) throw NumericalError("non-finite value in loss component '" + name + "'");
        if (with_gradient && !term.gradient.allFinite()) {
            throw NumericalError("non-finite gradient in loss component '" + name + "'");
        }
        out.components[name] = term.value;
    }
    out.total = cfg.combine(out.components);
    if (eikonal) out.eikonal_skipped = terms["eikonal"].skipped;
    if (with_gradient) {
        // Gradient weights mirror LossConfig::combine.
        std::map<std::string, double> weight;
        switch (cfg.variant) {
        case LossVariant::IGR: weight = {{"data", 1.0}, {"eikonal", cfg.eikonal_weight}}; break;
        case LossVariant::SIREN:
            weight = {{"data", 1.0}, {"eikonal", cfg.eikonal_weight}, {"ssa", cfg.ssa_weight}};
            break;
        case LossVariant::NeuralPull: weight = {{"neural_pull", 1.0}}; break;
        case LossVariant::DiffCD:
            weight = {{"data", 0.5}, {"surface_to_points", 0.5}, {"eikonal", cfg.eikonal_weight}};
            break;
        }
        out.gradient = zero_gradient(field);
        for (const auto& [name, term] : terms) out.gradient += weight.at(name) * term.gradient;
    }
    return out;
}

}  // namespace diffcd
