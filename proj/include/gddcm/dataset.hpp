#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "gddcm/mixture.hpp"

namespace gddcm {

/// Sample i is drawn from the stream keyed (seed, i), so any prefix is stable.
std::vector<Vector> generate_dataset(const GaussianMixture& mix, std::uint32_t count, std::uint64_t seed);

/// Header row v0..v{d-1}, then one sample per row at round-trip precision.
void write_vectors_csv(std::ostream& out, const std::vector<Vector>& rows);
void write_vectors_csv(const std::string& path, const std::vector<Vector>& rows);

/// Throws ConfigError on ragged rows, non-numeric cells or an empty file.
std::vector<Vector> read_vectors_csv(std::istream& in);
std::vector<Vector> read_vectors_csv(const std::string& path);

}  // namespace gddcm
