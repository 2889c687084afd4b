#include "gddcm/toy_model.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "byte_io.hpp"

namespace gddcm {

namespace {

constexpr std::uint8_t kModelVersion = 1;
constexpr std::uint64_t kMonitorSalt = 0x4D4F4E49544F52ULL;
constexpr std::int64_t kInitStream = -3;

double time_scale_for(ModelFamily family) { return MarginalSchedule::for_family(family).t_max(); }

struct Batch {
    Eigen::MatrixXd x;       // dim x B, network input states
    Eigen::VectorXd t;       // B
    Eigen::MatrixXd target;  // dim x B
};

// One (x_t, t, target) draw for the family's regression objective.
void draw_example(const GaussianMixture& data, ModelFamily family, CounterRng& rng, Batch& b, Eigen::Index col) {
    const Vector x0 = gm_sample(data, rng);
    const Vector eps = rng.normal_vector(data.dim());
    double t = 0.0;
    if (family == ModelFamily::DdpmDiscrete) {
        const auto& vp = DiscreteVpSchedule::standard();
        const int tau = 1 + static_cast<int>(rng.below(static_cast<std::uint64_t>(vp.steps())));
        t = static_cast<double>(tau) / vp.steps();
        b.x.col(col) = vp.sqrt_alpha_bar(tau) * x0 + vp.sqrt_one_minus_alpha_bar(tau) * eps;
        b.target.col(col) = eps;
    } else {
        t = rng.uniform() * MarginalSchedule::for_family(ModelFamily::Flow).t_max();
        b.x.col(col) = (1.0 - t) * x0 + t * eps;
        b.target.col(col) = -x0 + eps;
    }
    b.t[col] = t;
}

Batch draw_batch(const GaussianMixture& data, ModelFamily family, CounterRng& rng, std::uint32_t size) {
    Batch b{Eigen::MatrixXd(data.dim(), size), Eigen::VectorXd(size), Eigen::MatrixXd(data.dim(), size)};
    for (Eigen::Index c = 0; c < static_cast<Eigen::Index>(size); ++c) draw_example(data, family, rng, b, c);
    return b;
}

double batch_loss(const Eigen::MatrixXd& pred, const Eigen::MatrixXd& target) {
    return (pred - target).squaredNorm() / static_cast<double>(pred.size());
}

}  // namespace

void TrainConfig::validate() const {
    if (steps < 1) throw ConfigError("training needs steps >= 1");
    if (batch < 1) throw ConfigError("training needs batch >= 1");
    if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate)) {
        throw ConfigError("learning rate must be finite and non-negative");
    }
    if (monitor_every < 1 || monitor_batch < 1) throw ConfigError("monitor interval and batch must be >= 1");
}

ToyDenoiser::ToyDenoiser(ModelFamily family, Eigen::Index dim)
    : W1(Eigen::MatrixXd::Zero(kWidth, dim + 1)),
      W2(Eigen::MatrixXd::Zero(kWidth, kWidth)),
      W3(Eigen::MatrixXd::Zero(dim, kWidth)),
      b1(Vector::Zero(kWidth)),
      b2(Vector::Zero(kWidth)),
      b3(Vector::Zero(dim)),
      family_(family),
      time_scale_(time_scale_for(family)),
      anchor_(Vector::Zero(dim)) {
    if (dim < 1) throw DomainError("toy model needs dim >= 1");
    if (family != ModelFamily::DdpmDiscrete && family != ModelFamily::Flow) {
        throw ConfigError("toy training supports the ddpm and flow families only");
    }
}

void ToyDenoiser::set_anchor(const Vector& anchor) {
    if (anchor.size() != dim()) throw ShapeError("toy model anchor dimension mismatch");
    anchor_ = anchor;
}

Eigen::MatrixXd ToyDenoiser::forward_batch(const Eigen::MatrixXd& x, const Eigen::VectorXd& t) const {
    const Eigen::Index d = dim();
    const Eigen::MatrixXd h1 =
        ((W1.leftCols(d) * x + W1.col(d) * (t.transpose() / time_scale_)).colwise() + b1).array().tanh().matrix();
    const Eigen::MatrixXd h2 = ((W2 * h1).colwise() + b2).array().tanh().matrix();
    return (W3 * h2).colwise() + b3;
}

Vector ToyDenoiser::output(const Vector& x_t, double t) const {
    if (x_t.size() != dim()) throw ShapeError("toy_forward: input dimension mismatch");
    Eigen::VectorXd tv(1);
    tv[0] = t;
    return forward_batch(x_t, tv).col(0);
}

Vector toy_forward(const ToyDenoiser& model, const Vector& x_t, double t) { return model.output(x_t, t); }

ToyDenoiser train_model(const GaussianMixture& data, const TrainConfig& cfg, ModelFamily family) {
    cfg.validate();
    ToyDenoiser model(family, data.dim());
    model.set_anchor(data.mean());
    const Eigen::Index d = data.dim();

    CounterRng init(CounterRng::stream_key(cfg.seed, kInitStream));
    auto init_layer = [&](Eigen::MatrixXd& m) {
        const double scale = 1.0 / std::sqrt(static_cast<double>(m.cols()));
        for (Eigen::Index j = 0; j < m.cols(); ++j)
            for (Eigen::Index i = 0; i < m.rows(); ++i) m(i, j) = scale * init.normal();
    };
    init_layer(model.W1);
    init_layer(model.W2);
    init_layer(model.W3);

    CounterRng monitor_rng(CounterRng::stream_key(cfg.seed ^ kMonitorSalt, -1));
    const Batch monitor = draw_batch(data, family, monitor_rng, cfg.monitor_batch);
    auto record = [&](std::uint64_t step) {
        const double loss = batch_loss(model.forward_batch(monitor.x, monitor.t), monitor.target);
        if (!std::isfinite(loss)) {
            throw TrainingDivergedError("non-finite loss at step " + std::to_string(step));
        }
        model.loss_curve_.push_back({step, loss});
    };

    const double B = cfg.batch;
    for (std::uint64_t step = 0; step < cfg.steps; ++step) {
        if (step % cfg.monitor_every == 0) record(step);

        CounterRng rng(CounterRng::stream_key(cfg.seed, static_cast<std::int64_t>(step)));
        const Batch b = draw_batch(data, family, rng, cfg.batch);

        Eigen::MatrixXd input(d + 1, b.x.cols());
        input.topRows(d) = b.x;
        input.row(d) = b.t.transpose() / model.time_scale();

        const Eigen::MatrixXd h1 = ((model.W1 * input).colwise() + model.b1).array().tanh().matrix();
        const Eigen::MatrixXd h2 = ((model.W2 * h1).colwise() + model.b2).array().tanh().matrix();
        const Eigen::MatrixXd y = (model.W3 * h2).colwise() + model.b3;

        const double loss = batch_loss(y, b.target);
        if (!std::isfinite(loss)) throw TrainingDivergedError("non-finite loss at step " + std::to_string(step));

        const Eigen::MatrixXd g3 = 2.0 * (y - b.target) / (B * static_cast<double>(d));
        const Eigen::MatrixXd g2 = ((model.W3.transpose() * g3).array() * (1.0 - h2.array().square())).matrix();
        const Eigen::MatrixXd g1 = ((model.W2.transpose() * g2).array() * (1.0 - h1.array().square())).matrix();

        const double lr = cfg.learning_rate;
        model.W3 -= lr * g3 * h2.transpose();
        model.b3 -= lr * g3.rowwise().sum();
        model.W2 -= lr * g2 * h1.transpose();
        model.b2 -= lr * g2.rowwise().sum();
        model.W1 -= lr * g1 * input.transpose();
        model.b1 -= lr * g1.rowwise().sum();
    }
    record(cfg.steps);
    return model;
}

ToyDenoiser train_epsilon(const GaussianMixture& data, const TrainConfig& cfg) {
    return train_model(data, cfg, ModelFamily::DdpmDiscrete);
}

ToyDenoiser train_flow(const GaussianMixture& data, const TrainConfig& cfg) {
    return train_model(data, cfg, ModelFamily::Flow);
}

namespace {

const std::vector<LossPoint>& checked_curve(const ToyDenoiser& model) {
    if (model.loss_curve().empty()) throw DomainError("model has no loss curve");
    return model.loss_curve();
}

}  // namespace

double initial_loss(const ToyDenoiser& model) { return checked_curve(model).front().loss; }

double final_loss(const ToyDenoiser& model, double fraction) {
    const auto& curve = checked_curve(model);
    const auto n = std::clamp<std::size_t>(static_cast<std::size_t>(fraction * curve.size()), 1, curve.size());
    double sum = 0.0;
    for (std::size_t i = curve.size() - n; i < curve.size(); ++i) sum += curve[i].loss;
    return sum / static_cast<double>(n);
}

std::vector<std::uint8_t> serialize_model(const ToyDenoiser& model) {
    detail::ByteWriter w;
    for (char c : {'g', 'D', 'T', 'M'}) w.u8(static_cast<std::uint8_t>(c));
    w.u8(kModelVersion);
    w.u8(static_cast<std::uint8_t>(model.family()));
    w.u32(static_cast<std::uint32_t>(model.dim()));
    w.u32(static_cast<std::uint32_t>(ToyDenoiser::kWidth));
    for (Eigen::Index i = 0; i < model.dim(); ++i) w.f64(model.anchor()[i]);
    auto put_matrix = [&](const Eigen::MatrixXd& m) {
        for (Eigen::Index i = 0; i < m.rows(); ++i)
            for (Eigen::Index j = 0; j < m.cols(); ++j) w.f64(m(i, j));
    };
    put_matrix(model.W1);
    put_matrix(model.b1);
    put_matrix(model.W2);
    put_matrix(model.b2);
    put_matrix(model.W3);
    put_matrix(model.b3);
    return std::move(w.bytes());
}

ToyDenoiser deserialize_model(std::span<const std::uint8_t> bytes) {
    detail::ByteReader r(bytes);
    for (char c : {'g', 'D', 'T', 'M'}) {
        if (r.u8("magic") != static_cast<std::uint8_t>(c)) throw CorruptStreamError(0, "bad model magic");
    }
    if (r.u8("version") != kModelVersion) throw CorruptStreamError(4, "unsupported model version");
    const auto family_byte = r.u8("family");
    if (family_byte > 3) throw CorruptStreamError(5, "unknown family byte");
    const auto dim = r.u32("dim");
    const auto width = r.u32("width");
    if (dim < 1 || width != ToyDenoiser::kWidth) throw CorruptStreamError(6, "unsupported model dimensions");
    const Eigen::Index d = dim;
    const std::size_t expected = 14 + 8 * (d + (ToyDenoiser::kWidth * (d + 1) + ToyDenoiser::kWidth) +
                                           (ToyDenoiser::kWidth * ToyDenoiser::kWidth + ToyDenoiser::kWidth) +
                                           (d * ToyDenoiser::kWidth + d));
    if (bytes.size() != expected) {
        throw CorruptStreamError(std::min(bytes.size(), expected), "model blob has " + std::to_string(bytes.size()) +
                                                                       " bytes, expected " + std::to_string(expected));
    }
    ToyDenoiser model(static_cast<ModelFamily>(family_byte), d);
    Vector anchor(d);
    for (Eigen::Index i = 0; i < d; ++i) anchor[i] = r.f64("anchor");
    model.set_anchor(anchor);
    auto get_matrix = [&](auto& m) {
        for (Eigen::Index i = 0; i < m.rows(); ++i)
            for (Eigen::Index j = 0; j < m.cols(); ++j) m(i, j) = r.f64("weights");
    };
    get_matrix(model.W1);
    get_matrix(model.b1);
    get_matrix(model.W2);
    get_matrix(model.b2);
    get_matrix(model.W3);
    get_matrix(model.b3);
    return model;
}

}  // namespace gddcm
