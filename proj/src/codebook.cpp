#include "gddcm/codebook.hpp"

namespace gddcm {

Codebook codebook_for_step(const CodebookSpec& spec, std::int64_t step) {
    if (spec.size < 1) throw DomainError("codebook size must be at least 1");
    if (spec.dim < 1) throw DomainError("codebook dimension must be at least 1");
    CounterRng rng(CounterRng::stream_key(spec.seed, step));
    Codebook book(spec.dim, static_cast<Eigen::Index>(spec.size));
    rng.fill_normal(Eigen::Map<Vector>(book.data(), book.size()));
    return book;
}

NoiseSelection select_noise(const Codebook& codebook, const Vector& target_diff) {
    if (codebook.rows() != target_diff.size()) throw ShapeError("select_noise: dimension mismatch");
    if (codebook.cols() < 1) throw DomainError("select_noise: empty codebook");
    const Vector scores = codebook.transpose() * target_diff;
    Eigen::Index best = 0;
    for (Eigen::Index k = 1; k < scores.size(); ++k) {
        if (scores[k] > scores[best]) best = k;
    }
    return {best, codebook.col(best), scores[best]};
}

NoiseSelection nearest_noise(const Codebook& codebook, const Vector& eps_target) {
    if (codebook.rows() != eps_target.size()) throw ShapeError("nearest_noise: dimension mismatch");
    if (codebook.cols() < 1) throw DomainError("nearest_noise: empty codebook");
    const Vector dist = (codebook.colwise() - eps_target).colwise().squaredNorm().transpose();
    Eigen::Index best = 0;
    for (Eigen::Index k = 1; k < dist.size(); ++k) {
        if (dist[k] < dist[best]) best = k;
    }
    return {best, codebook.col(best), dist[best]};
}

}  // namespace gddcm
