#include "diffcd/field.hpp"

#include "diffcd/parallel.hpp"
#include "diffcd/rng.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <istream>
#include <numbers>
#include <optional>
#include <ostream>
#include <sstream>

namespace diffcd {

int precision_bits(Precision p) { return p == Precision::F32 ? 32 : 64; }

Precision precision_from_bits(int bits) {
    if (bits == 32) return Precision::F32;
    if (bits == 64) return Precision::F64;
    throw InputError("precision must be 32 or 64, got " + std::to_string(bits));
}

// ---------------------------------------------------------------------------
// FieldConfig / FieldParams

void FieldConfig::validate() const {
    if (input_dim != 2 && input_dim != 3) throw InputError("field input_dim must be 2 or 3");
    if (hidden_layers < 1) throw InputError("field hidden_layers must be >= 1");
    if (hidden_width < 1) throw InputError("field hidden_width must be >= 1");
    for (int s : skip_layers) {
        if (s < 1 || s >= hidden_layers) {
            throw InputError("skip layer index " + std::to_string(s) +
                             " must lie in [1, hidden_layers)");
        }
    }
    if (!(activation_sharpness > 0.0)) throw InputError("activation_sharpness must be > 0");
    if (!(init_radius > 0.0)) throw InputError("init_radius must be > 0");
}

bool FieldConfig::is_skip(int layer) const {
    return std::find(skip_layers.begin(), skip_layers.end(), layer) != skip_layers.end();
}

int FieldConfig::layer_in_dim(int layer) const {
    if (layer == 0) return input_dim;
    return is_skip(layer) ? hidden_width + input_dim : hidden_width;
}

int FieldConfig::layer_out_dim(int layer) const {
    return layer == hidden_layers ? 1 : hidden_width;
}

std::size_t FieldConfig::param_count() const {
    std::size_t n = 0;
    for (int l = 0; l < num_linear_layers(); ++l) {
        const auto in = static_cast<std::size_t>(layer_in_dim(l));
        const auto out = static_cast<std::size_t>(layer_out_dim(l));
        n += out * in + out;
    }
    return n;
}

FieldParams::FieldParams(FieldConfig config) : config_(std::move(config)) {
    config_.validate();
    std::sort(config_.skip_layers.begin(), config_.skip_layers.end());
    config_.skip_layers.erase(std::unique(config_.skip_layers.begin(), config_.skip_layers.end()),
                              config_.skip_layers.end());
    std::size_t off = 0;
    for (int l = 0; l < config_.num_linear_layers(); ++l) {
        offsets_.push_back(off);
        off += static_cast<std::size_t>(config_.layer_out_dim(l)) *
               (static_cast<std::size_t>(config_.layer_in_dim(l)) + 1);
    }
    flat_ = Vector::Zero(static_cast<Eigen::Index>(off));
}

std::size_t FieldParams::bias_offset(int layer) const {
    return offsets_.at(layer) + static_cast<std::size_t>(config_.layer_out_dim(layer)) *
                                    static_cast<std::size_t>(config_.layer_in_dim(layer));
}

Eigen::Map<Eigen::MatrixXd> FieldParams::weight(int layer) {
    return {flat_.data() + weight_offset(layer), config_.layer_out_dim(layer),
            config_.layer_in_dim(layer)};
}

Eigen::Map<const Eigen::MatrixXd> FieldParams::weight(int layer) const {
    return {flat_.data() + weight_offset(layer), config_.layer_out_dim(layer),
            config_.layer_in_dim(layer)};
}

Eigen::Map<Vector> FieldParams::bias(int layer) {
    return {flat_.data() + bias_offset(layer), config_.layer_out_dim(layer)};
}

Eigen::Map<const Vector> FieldParams::bias(int layer) const {
    return {flat_.data() + bias_offset(layer), config_.layer_out_dim(layer)};
}

void FieldParams::round_to_precision() {
    if (config_.precision == Precision::F32) {
        flat_ = flat_.cast<float>().cast<double>();
    }
}

// ---------------------------------------------------------------------------
// ScalarField conveniences

void ScalarField::accumulate_param_grad(const Points&, const Vector*, const Points*,
                                        Vector&) const {
    throw InputError("parameter gradients requested from a field without parameters");
}

double ScalarField::eval(const Vector& x) const {
    Vector v;
    evaluate(Points(x), v, nullptr);
    return v[0];
}

Vector ScalarField::grad_x(const Vector& x) const {
    Vector v;
    Points g;
    evaluate(Points(x), v, &g);
    return g.col(0);
}

Vector ScalarField::grad_theta(const Vector& x) const {
    if (num_params() == 0) throw InputError("grad_theta: field has no parameters");
    Vector out = Vector::Zero(static_cast<Eigen::Index>(num_params()));
    const Vector w = Vector::Ones(1);
    accumulate_param_grad(Points(x), &w, nullptr, out);
    return out;
}

Vector ScalarField::grad_theta_dot(const Vector& x, const Vector& u) const {
    if (num_params() == 0) throw InputError("grad_theta_dot: field has no parameters");
    if (u.size() != dim()) throw InputError("grad_theta_dot: direction dimension mismatch");
    Vector out = Vector::Zero(static_cast<Eigen::Index>(num_params()));
    const Points dirs(u);
    accumulate_param_grad(Points(x), nullptr, &dirs, out);
    return out;
}

// ---------------------------------------------------------------------------
// AnalyticSdf

AnalyticSdf AnalyticSdf::sphere(Vector center, double radius) {
    const auto d = center.size();
    return {Kind::Sphere, std::move(center), Vector::Zero(d), radius, 1.0};
}

AnalyticSdf AnalyticSdf::sphere(int dim, double radius) {
    return sphere(Vector::Zero(dim), radius);
}

AnalyticSdf AnalyticSdf::plane(Vector normal, double offset) {
    const double n = normal.norm();
    if (!(n > 0.0)) throw InputError("plane normal must be non-zero");
    const auto d = normal.size();
    return {Kind::Plane, Vector::Zero(d), normal / n, offset, 1.0};
}

AnalyticSdf AnalyticSdf::scaled_linear(Vector direction, double offset, double scale) {
    auto f = plane(std::move(direction), offset);
    f.kind_ = Kind::ScaledLinear;
    f.scale_ = scale;
    return f;
}

AnalyticSdf AnalyticSdf::constant(int dim, double value) {
    return {Kind::Constant, Vector::Zero(dim), Vector::Zero(dim), value, 1.0};
}

AnalyticSdf AnalyticSdf::box(Vector center, Vector half_extents) {
    if (center.size() != half_extents.size()) throw InputError("box: dimension mismatch");
    if (!(half_extents.array() > 0.0).all()) throw InputError("box: half extents must be > 0");
    return {Kind::Box, std::move(center), std::move(half_extents), 0.0, 1.0};
}

AnalyticSdf AnalyticSdf::scaled(double c) const {
    AnalyticSdf copy = *this;
    copy.scale_ *= c;
    return copy;
}

double AnalyticSdf::value_at(const Eigen::Ref<const Vector>& x, Eigen::Ref<Vector> grad) const {
    double value = 0.0;
    switch (kind_) {
    case Kind::Sphere: {
        const Vector r = x - center_;
        const double n = r.norm();
        value = n - a_;
        if (n > 0.0) grad = r / n; else grad.setZero();
        break;
    }
    case Kind::Plane:
    case Kind::ScaledLinear:
        value = axis_.dot(x) - a_;
        grad = axis_;
        break;
    case Kind::Constant:
        value = a_;
        grad.setZero();
        break;
    case Kind::Box: {
        const Vector local = x - center_;
        const Vector q = local.cwiseAbs() - axis_;
        const Vector outside = q.cwiseMax(0.0);
        const double out_norm = outside.norm();
        if (out_norm > 0.0) {
            value = out_norm;
            for (Eigen::Index i = 0; i < q.size(); ++i) {
                grad[i] = (local[i] < 0.0 ? -1.0 : 1.0) * outside[i] / out_norm;
            }
        } else {
            Eigen::Index axis = 0;
            value = q.maxCoeff(&axis);
            grad.setZero();
            grad[axis] = local[axis] < 0.0 ? -1.0 : 1.0;
        }
        break;
    }
    }
    grad *= scale_;
    return scale_ * value;
}

void AnalyticSdf::evaluate(const Points& x, Vector& values, Points* grads) const {
    check_dim(x);
    values.resize(x.cols());
    Vector g(dim());
    if (grads) grads->resize(dim(), x.cols());
    for (Eigen::Index j = 0; j < x.cols(); ++j) {
        values[j] = value_at(x.col(j), g);
        if (grads) grads->col(j) = g;
    }
}

// ---------------------------------------------------------------------------
// MLP

namespace {

constexpr Eigen::Index kEvalBlock = 256;

template <typename T>
class Mlp final : public MlpField {
public:
    using Mat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic>;
    using Arr = Eigen::Array<T, Eigen::Dynamic, Eigen::Dynamic>;
    using Vec = Eigen::Matrix<T, Eigen::Dynamic, 1>;

    explicit Mlp(const FieldParams& params) : params_(params) { load(); }

    int dim() const override { return params_.config().input_dim; }
    std::size_t num_params() const override { return params_.size(); }
    const FieldParams& params() const override { return params_; }

    void set_params(const FieldParams& params) override {
        if (!(params.config() == params_.config())) {
            throw InputError("set_params: architecture mismatch");
        }
        params_ = params;
        load();
    }

    void evaluate(const Points& x, Vector& values, Points* grads) const override {
        check_dim(x);
        const Eigen::Index n = x.cols();
        values.resize(n);
        if (grads) grads->resize(dim(), n);
        const auto blocks = parallel::block_count(static_cast<std::size_t>(n), kEvalBlock);
        parallel::for_blocks(blocks, [&](std::size_t b) {
            const Eigen::Index start = static_cast<Eigen::Index>(b) * kEvalBlock;
            const Eigen::Index len = std::min(kEvalBlock, n - start);
            Tape tape;
            forward(x.middleCols(start, len).template cast<T>(), tape);
            values.segment(start, len) = tape.out.transpose().template cast<double>();
            if (grads) {
                reverse(tape);
                grads->middleCols(start, len) = tape.grad_x.template cast<double>();
            }
        });
    }

    void accumulate_param_grad(const Points& x, const Vector* weights, const Points* dirs,
                               Vector& out) const override {
        check_dim(x);
        const Eigen::Index n = x.cols();
        if (weights && weights->size() != n) throw InputError("accumulate_param_grad: weight count");
        if (dirs && (dirs->rows() != dim() || dirs->cols() != n)) {
            throw InputError("accumulate_param_grad: direction shape");
        }
        if (out.size() != static_cast<Eigen::Index>(num_params())) {
            throw InputError("accumulate_param_grad: output size mismatch");
        }
        if (n == 0) return;
        // Block size depends only on n, so the reduction order is thread-independent.
        const Eigen::Index block = std::max<Eigen::Index>(512, (n + 15) / 16);
        const auto blocks = parallel::block_count(static_cast<std::size_t>(n), block);
        std::vector<Vector> partial(blocks);
        parallel::for_blocks(blocks, [&](std::size_t b) {
            const Eigen::Index start = static_cast<Eigen::Index>(b) * block;
            const Eigen::Index len = std::min(block, n - start);
            Tape tape;
            forward(x.middleCols(start, len).template cast<T>(), tape);
            reverse(tape);
            std::optional<Vec> c;
            if (weights) c = weights->segment(start, len).template cast<T>();
            if (dirs) tangent(dirs->middleCols(start, len).template cast<T>(), tape);
            partial[b] = Vector::Zero(out.size());
            param_grad(tape, c ? &*c : nullptr, dirs != nullptr, partial[b]);
        });
        for (const auto& p : partial) out += p;
    }

    Vector hidden_preactivation(const Vector& x, int layer) const override {
        if (layer < 0 || layer >= cfg().hidden_layers) throw InputError("layer out of range");
        Tape tape;
        forward(Points(x).template cast<T>(), tape);
        const Mat z = (W_[layer] * tape.in[layer]).colwise() + b_[layer];
        return z.col(0).template cast<double>();
    }

private:
    struct Tape {
        std::vector<Mat> in;     // input of each linear layer (0..L)
        std::vector<Arr> slope;  // softplus'(z_l)
        std::vector<Arr> z;      // pre-activations
        std::vector<Mat> dact;   // df/da_l
        std::vector<Mat> delta;  // df/dz_l
        Mat out;                 // 1 x n
        Mat grad_x;              // d x n
        // Tangent quantities along directions u (d/dt at x + t u).
        std::vector<Mat> in_t;
        std::vector<Arr> z_t;
        std::vector<Mat> delta_t;
    };

    const FieldConfig& cfg() const { return params_.config(); }

    void load() {
        const int layers = cfg().num_linear_layers();
        W_.resize(layers);
        b_.resize(layers);
        for (int l = 0; l < layers; ++l) {
            W_[l] = params_.weight(l).template cast<T>();
            b_[l] = params_.bias(l).template cast<T>();
        }
        beta_ = static_cast<T>(cfg().activation_sharpness);
    }

    static constexpr T inv_sqrt2() { return static_cast<T>(1.0 / std::numbers::sqrt2); }

    Mat skip_input(const Mat& prev, const Mat& x) const {
        Mat in(prev.rows() + x.rows(), prev.cols());
        in.topRows(prev.rows()) = prev * inv_sqrt2();
        in.bottomRows(x.rows()) = x * inv_sqrt2();
        return in;
    }

    void forward(const Mat& x, Tape& t) const {
        const int L = cfg().hidden_layers;
        t.in.assign(L + 1, Mat());
        t.slope.assign(L, Arr());
        t.z.assign(L, Arr());
        Mat act = x;
        for (int l = 0; l < L; ++l) {
            t.in[l] = (l > 0 && cfg().is_skip(l)) ? skip_input(act, x) : act;
            t.z[l] = ((W_[l] * t.in[l]).colwise() + b_[l]).array();
            const Arr bz = beta_ * t.z[l];
            // softplus_beta(z) = log(1 + exp(beta z)) / beta, evaluated stably
            act = ((bz.max(T(0)) + (-bz.abs()).exp().log1p()) / beta_).matrix();
            t.slope[l] = T(1) / (T(1) + (-bz).exp());
        }
        t.in[L] = act;
        t.out = (W_[L] * act).array() + b_[L](0);
    }

    // Reverse sweep seeded with df = 1 for every column.
    void reverse(Tape& t) const {
        const int L = cfg().hidden_layers;
        const Eigen::Index n = t.out.cols();
        const int width = cfg().hidden_width;
        t.dact.assign(L, Mat());
        t.delta.assign(L, Mat());
        t.grad_x = Mat::Zero(dim(), n);
        Mat gact = W_[L].transpose().replicate(1, n);
        for (int l = L - 1; l >= 0; --l) {
            t.dact[l] = gact;
            t.delta[l] = (t.slope[l] * gact.array()).matrix();
            const Mat gin = W_[l].transpose() * t.delta[l];
            if (l == 0) {
                t.grad_x += gin;
            } else if (cfg().is_skip(l)) {
                gact = gin.topRows(width) * inv_sqrt2();
                t.grad_x += gin.bottomRows(dim()) * inv_sqrt2();
            } else {
                gact = gin;
            }
        }
    }

    // Forward-over-reverse: derivative of the forward and reverse sweeps along u.
    void tangent(const Mat& u, Tape& t) const {
        const int L = cfg().hidden_layers;
        const int width = cfg().hidden_width;
        t.in_t.assign(L + 1, Mat());
        t.z_t.assign(L, Arr());
        t.delta_t.assign(L, Mat());
        Mat act_t = u;
        for (int l = 0; l < L; ++l) {
            t.in_t[l] = (l > 0 && cfg().is_skip(l)) ? skip_input(act_t, u) : act_t;
            t.z_t[l] = (W_[l] * t.in_t[l]).array();
            act_t = (t.slope[l] * t.z_t[l]).matrix();
        }
        t.in_t[L] = act_t;

        Mat gact_t = Mat::Zero(width, u.cols());
        for (int l = L - 1; l >= 0; --l) {
            const Arr curvature = beta_ * t.slope[l] * (T(1) - t.slope[l]);
            t.delta_t[l] =
                (curvature * t.z_t[l] * t.dact[l].array() + t.slope[l] * gact_t.array()).matrix();
            if (l == 0) break;
            const Mat gin_t = W_[l].transpose() * t.delta_t[l];
            gact_t = cfg().is_skip(l) ? Mat(gin_t.topRows(width) * inv_sqrt2()) : gin_t;
        }
    }

    void param_grad(const Tape& t, const Vec* c, bool with_tangent, Vector& out) const {
        const int L = cfg().hidden_layers;
        for (int l = 0; l <= L; ++l) {
            // Upstream signal for this layer's outputs: delta (or 1 for the output layer).
            Mat wsig;   // weighted by c plus tangent delta
            Mat plain;  // delta, multiplied against the input tangent
            if (l == L) {
                const Eigen::Index n = t.in[L].cols();
                wsig = Mat::Zero(1, n);
                if (c) wsig += c->transpose();
                plain = Mat::Ones(1, n);
            } else {
                wsig = Mat::Zero(t.delta[l].rows(), t.delta[l].cols());
                if (c) wsig += t.delta[l] * c->asDiagonal();
                if (with_tangent) wsig += t.delta_t[l];
                plain = t.delta[l];
            }
            Mat gw = wsig * t.in[l].transpose();
            if (with_tangent) gw += plain * t.in_t[l].transpose();
            const Vec gb = wsig.rowwise().sum();

            const auto off = static_cast<Eigen::Index>(params_.weight_offset(l));
            out.segment(off, gw.size()) += Eigen::Map<const Mat>(gw.data(), gw.size(), 1)
                                               .template cast<double>();
            const auto boff = static_cast<Eigen::Index>(params_.bias_offset(l));
            out.segment(boff, gb.size()) += gb.template cast<double>();
        }
    }

    FieldParams params_;
    std::vector<Mat> W_;
    std::vector<Vec> b_;
    T beta_{};
};

}  // namespace

std::unique_ptr<MlpField> MlpField::create(const FieldParams& params) {
    if (params.config().precision == Precision::F32) return std::make_unique<Mlp<float>>(params);
    return std::make_unique<Mlp<double>>(params);
}

FieldParams init_geometric(const FieldConfig& config, std::uint64_t seed) {
    FieldParams params(config);
    Rng rng = Rng::stream(seed, 0, StreamPurpose::Init);
    const FieldConfig& c = params.config();
    for (int l = 0; l < c.num_linear_layers(); ++l) {
        auto w = params.weight(l);
        auto b = params.bias(l);
        if (l == c.hidden_layers) {
            const double mean = std::sqrt(std::numbers::pi) / std::sqrt(double(c.layer_in_dim(l)));
            for (Eigen::Index i = 0; i < w.size(); ++i) w.data()[i] = rng.normal(mean, 1e-4);
            b.setConstant(-c.init_radius);
        } else {
            const double stddev = std::sqrt(2.0) / std::sqrt(double(c.layer_out_dim(l)));
            for (Eigen::Index i = 0; i < w.size(); ++i) w.data()[i] = rng.normal(0.0, stddev);
            b.setZero();
        }
    }
    params.round_to_precision();
    return params;
}

// ---------------------------------------------------------------------------
// Checkpoint IO

std::string format_double(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

namespace {

double parse_double(const std::string& s, const std::string& key) {
    double v = 0.0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
        throw InputError("checkpoint: bad number for '" + key + "': " + s);
    }
    return v;
}

long long parse_int(const std::string& s, const std::string& key) {
    long long v = 0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
        throw InputError("checkpoint: bad integer for '" + key + "': " + s);
    }
    return v;
}

std::string join_ints(const std::vector<int>& v) {
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i) s += ',';
        s += std::to_string(v[i]);
    }
    return s;
}

constexpr const char* kMagic = "diffcd-checkpoint";

}  // namespace

void write_binary(std::ostream& out, const Vector& values, Precision precision) {
    static_assert(std::endian::native == std::endian::little, "little-endian host required");
    if (precision == Precision::F32) {
        const Eigen::VectorXf f = values.cast<float>();
        out.write(reinterpret_cast<const char*>(f.data()),
                  static_cast<std::streamsize>(f.size() * sizeof(float)));
    } else {
        out.write(reinterpret_cast<const char*>(values.data()),
                  static_cast<std::streamsize>(values.size() * sizeof(double)));
    }
}

Vector read_binary(std::istream& in, std::size_t count, Precision precision) {
    const auto n = static_cast<Eigen::Index>(count);
    Vector v(n);
    if (precision == Precision::F32) {
        Eigen::VectorXf f(n);
        in.read(reinterpret_cast<char*>(f.data()), static_cast<std::streamsize>(count * sizeof(float)));
        v = f.cast<double>();
    } else {
        in.read(reinterpret_cast<char*>(v.data()), static_cast<std::streamsize>(count * sizeof(double)));
    }
    if (!in) throw InputError("checkpoint: truncated binary payload");
    return v;
}

void write_checkpoint(std::ostream& out, const FieldParams& params, const HeaderEntries& extra) {
    const FieldConfig& c = params.config();
    out << kMagic << '\n';
    out << "format_version=" << kCheckpointFormatVersion << '\n';
    out << "input_dim=" << c.input_dim << '\n';
    out << "hidden_layers=" << c.hidden_layers << '\n';
    out << "hidden_width=" << c.hidden_width << '\n';
    out << "skip_layers=" << join_ints(c.skip_layers) << '\n';
    out << "activation_sharpness=" << format_double(c.activation_sharpness) << '\n';
    out << "init_radius=" << format_double(c.init_radius) << '\n';
    out << "precision=" << precision_bits(c.precision) << '\n';
    out << "param_count=" << params.size() << '\n';
    for (const auto& [k, v] : extra) out << k << '=' << v << '\n';
    out << "end_header\n";
    write_binary(out, params.flat(), c.precision);
}

FieldParams read_checkpoint(std::istream& in, std::map<std::string, std::string>* extra) {
    std::string line;
    if (!std::getline(in, line) || line != kMagic) throw InputError("not a diffcd checkpoint");
    std::map<std::string, std::string> kv;
    bool terminated = false;
    while (std::getline(in, line)) {
        if (line == "end_header") {
            terminated = true;
            break;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw InputError("checkpoint: malformed header line: " + line);
        kv[line.substr(0, eq)] = line.substr(eq + 1);
    }
    if (!terminated) throw InputError("checkpoint: missing end_header");

    auto take = [&](const std::string& key) {
        const auto it = kv.find(key);
        if (it == kv.end()) throw InputError("checkpoint: missing key '" + key + "'");
        std::string v = it->second;
        kv.erase(it);
        return v;
    };

    if (parse_int(take("format_version"), "format_version") != kCheckpointFormatVersion) {
        throw InputError("checkpoint: unsupported format version");
    }
    FieldConfig c;
    c.input_dim = static_cast<int>(parse_int(take("input_dim"), "input_dim"));
    c.hidden_layers = static_cast<int>(parse_int(take("hidden_layers"), "hidden_layers"));
    c.hidden_width = static_cast<int>(parse_int(take("hidden_width"), "hidden_width"));
    c.skip_layers.clear();
    {
        std::stringstream ss(take("skip_layers"));
        std::string tok;
        while (std::getline(ss, tok, ',')) {
            if (!tok.empty()) c.skip_layers.push_back(static_cast<int>(parse_int(tok, "skip_layers")));
        }
    }
    c.activation_sharpness = parse_double(take("activation_sharpness"), "activation_sharpness");
    c.init_radius = parse_double(take("init_radius"), "init_radius");
    c.precision = precision_from_bits(static_cast<int>(parse_int(take("precision"), "precision")));
    const auto count = static_cast<std::size_t>(parse_int(take("param_count"), "param_count"));

    FieldParams params(c);
    if (params.size() != count) throw InputError("checkpoint: param_count does not match architecture");
    params.flat() = read_binary(in, count, c.precision);
    if (extra) *extra = std::move(kv);
    return params;
}

void write_file_atomically(const std::filesystem::path& path,
                           const std::function<void(std::ostream&)>& writer) {
    std::filesystem::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw InputError("cannot open for writing: " + tmp.string());
        writer(out);
        out.flush();
        if (!out) throw InputError("write failed: " + tmp.string());
    }
    std::filesystem::rename(tmp, path);
}

void save_field(const std::filesystem::path& path, const FieldParams& params) {
    write_file_atomically(path, [&](std::ostream& out) { write_checkpoint(out, params); });
}

FieldParams load_field(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InputError("cannot open checkpoint: " + path.string());
    return read_checkpoint(in, nullptr);
}

}  // namespace diffcd
