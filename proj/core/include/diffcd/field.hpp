#pragma once

#include "diffcd/types.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <map>
#include <memory>
#include <string>
#include <utility>
#include <vector>

namespace diffcd {

enum class Precision { F32, F64 };

int precision_bits(Precision p);
Precision precision_from_bits(int bits);

/// Architecture of the coordinate MLP.
///
/// Hidden layer l maps its input to `hidden_width` softplus units. Layers listed
/// in `skip_layers` receive [a_{l-1}; x] / sqrt(2) as input, so their weight
/// matrices have hidden_width + input_dim columns. A final linear layer maps the
/// last hidden activation to the scalar output.
struct FieldConfig {
    int input_dim = 3;
    int hidden_layers = 8;
    int hidden_width = 256;
    std::vector<int> skip_layers{4};
    double activation_sharpness = 100.0;  // softplus beta
    double init_radius = 0.5;
    Precision precision = Precision::F32;

    void validate() const;
    bool is_skip(int layer) const;
    int layer_in_dim(int layer) const;
    int layer_out_dim(int layer) const;
    int num_linear_layers() const { return hidden_layers + 1; }
    std::size_t param_count() const;

    friend bool operator==(const FieldConfig&, const FieldConfig&) = default;
};

/// Trainable parameters θ: a flat vector with structured per-layer views.
/// Layer l stores its weight matrix (column-major, out x in) followed by its bias.
class FieldParams {
public:
    explicit FieldParams(FieldConfig config);

    const FieldConfig& config() const { return config_; }
    std::size_t size() const { return static_cast<std::size_t>(flat_.size()); }

    Vector& flat() { return flat_; }
    const Vector& flat() const { return flat_; }

    Eigen::Map<Eigen::MatrixXd> weight(int layer);
    Eigen::Map<const Eigen::MatrixXd> weight(int layer) const;
    Eigen::Map<Vector> bias(int layer);
    Eigen::Map<const Vector> bias(int layer) const;
    std::size_t weight_offset(int layer) const { return offsets_.at(layer); }
    std::size_t bias_offset(int layer) const;

    /// Rounds every entry to the configured storage precision.
    void round_to_precision();

    friend bool operator==(const FieldParams& a, const FieldParams& b) {
        return a.config_ == b.config_ && a.flat_.size() == b.flat_.size() &&
               (a.flat_.array() == b.flat_.array()).all();
    }

private:
    FieldConfig config_;
    Vector flat_;
    std::vector<std::size_t> offsets_;
};

/// Differentiable map from R^d to R.
///
/// Batched queries take one point per column. Parameter derivatives are only
/// available on fields that have parameters; the default implementation throws.
class ScalarField {
public:
    virtual ~ScalarField() = default;

    virtual int dim() const = 0;

    /// Fills values (n) and, if `grads` is non-null, spatial gradients (dim x n).
    virtual void evaluate(const Points& x, Vector& values, Points* grads) const = 0;

    virtual std::size_t num_params() const { return 0; }

    /// out += sum_j weights_j * grad_theta f(x_j) + sum_j grad_theta (dirs_j . grad_x f(x_j)).
    /// Either of `weights` / `dirs` may be null.
    virtual void accumulate_param_grad(const Points& x, const Vector* weights,
                                       const Points* dirs, Vector& out) const;

    double eval(const Vector& x) const;
    Vector grad_x(const Vector& x) const;
    Vector grad_theta(const Vector& x) const;
    /// grad_theta of u . grad_x f(theta, x).
    Vector grad_theta_dot(const Vector& x, const Vector& u) const;

protected:
    void check_dim(const Points& x) const { require_dim(x, dim(), "field evaluation"); }
};

/// Closed-form distance fields used as test oracles.
class AnalyticSdf final : public ScalarField {
public:
    enum class Kind { Sphere, Plane, ScaledLinear, Constant, Box };

    /// ‖x - c‖ - r. A negative radius gives a field with no zero crossing.
    static AnalyticSdf sphere(Vector center, double radius);
    static AnalyticSdf sphere(int dim, double radius);
    static AnalyticSdf circle(double radius) { return sphere(2, radius); }
    /// n̂ . x - offset, with n̂ the normalized `normal`.
    static AnalyticSdf plane(Vector normal, double offset);
    /// scale * (d̂ . x - offset).
    static AnalyticSdf scaled_linear(Vector direction, double offset, double scale);
    static AnalyticSdf constant(int dim, double value);
    static AnalyticSdf box(Vector center, Vector half_extents);

    /// Same field multiplied by c (no longer an SDF unless |c| = 1).
    AnalyticSdf scaled(double c) const;

    Kind kind() const { return kind_; }
    int dim() const override { return static_cast<int>(center_.size()); }
    void evaluate(const Points& x, Vector& values, Points* grads) const override;

private:
    AnalyticSdf(Kind kind, Vector center, Vector axis, double a, double scale)
        : kind_(kind), center_(std::move(center)), axis_(std::move(axis)), a_(a), scale_(scale) {}

    double value_at(const Eigen::Ref<const Vector>& x, Eigen::Ref<Vector> grad) const;

    Kind kind_;
    Vector center_;  // sphere/box center; carries the dimension for every kind
    Vector axis_;    // plane normal, linear direction, or box half extents
    double a_;       // radius, offset, or constant value
    double scale_;
};

/// The trainable coordinate MLP. Evaluated in the precision named by its config.
class MlpField : public ScalarField {
public:
    static std::unique_ptr<MlpField> create(const FieldParams& params);

    virtual const FieldParams& params() const = 0;
    virtual void set_params(const FieldParams& params) = 0;

    /// Pre-activation of hidden layer `layer` at x (exposed for architecture tests).
    virtual Vector hidden_preactivation(const Vector& x, int layer) const = 0;
};

/// Geometric initialization: the initial zero-level set approximates a sphere of
/// radius config.init_radius around the origin. Deterministic in `seed`.
FieldParams init_geometric(const FieldConfig& config, std::uint64_t seed);

// Checkpoints: a text header of key=value lines terminated by "end_header",
// followed by the flat parameters as little-endian IEEE-754 values of the
// declared precision.
constexpr int kCheckpointFormatVersion = 1;

using HeaderEntries = std::vector<std::pair<std::string, std::string>>;

void write_checkpoint(std::ostream& out, const FieldParams& params,
                      const HeaderEntries& extra_header = {});
/// Reads header and parameters; the stream is left positioned after them. Header
/// keys not describing the field are returned in `extra_header` if given.
FieldParams read_checkpoint(std::istream& in,
                            std::map<std::string, std::string>* extra_header = nullptr);

void save_field(const std::filesystem::path& path, const FieldParams& params);
FieldParams load_field(const std::filesystem::path& path);

/// Writes via a temporary file in the same directory and renames it into place.
void write_file_atomically(const std::filesystem::path& path,
                           const std::function<void(std::ostream&)>& writer);

// Little-endian binary helpers shared by checkpoint writers.
void write_binary(std::ostream& out, const Vector& values, Precision precision);
Vector read_binary(std::istream& in, std::size_t count, Precision precision);

std::string format_double(double v);

}  // namespace diffcd
