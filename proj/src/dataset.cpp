#include "gddcm/dataset.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "gddcm/errors.hpp"

namespace gddcm {

std::vector<Vector> generate_dataset(const GaussianMixture& mix, std::uint32_t count, std::uint64_t seed) {
    std::vector<Vector> out;
    out.reserve(count);
    for (std::uint32_t i = 0; i < count; ++i) {
        CounterRng rng(CounterRng::stream_key(seed, i));
        out.push_back(gm_sample(mix, rng));
    }
    return out;
}

void write_vectors_csv(std::ostream& out, const std::vector<Vector>& rows) {
    if (rows.empty()) throw ShapeError("no rows to write");
    const Eigen::Index d = rows.front().size();
    for (Eigen::Index i = 0; i < d; ++i) out << (i ? ",v" : "v") << i;
    out << '\n';
    char buf[32];
    for (const auto& r : rows) {
        if (r.size() != d) throw ShapeError("ragged rows");
        for (Eigen::Index i = 0; i < d; ++i) {
            std::snprintf(buf, sizeof buf, "%.17g", r[i]);
            if (i) out << ',';
            out << buf;
        }
        out << '\n';
    }
}

void write_vectors_csv(const std::string& path, const std::vector<Vector>& rows) {
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot write '" + path + "'");
    write_vectors_csv(out, rows);
}

std::vector<Vector> read_vectors_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) throw ConfigError("dataset file is empty");
    std::vector<Vector> rows;
    std::size_t line_no = 1;
    Eigen::Index d = -1;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::vector<double> vals;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) {
            double v = 0.0;
            const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
            if (ec != std::errc() || ptr != cell.data() + cell.size()) {
                throw ConfigError("line " + std::to_string(line_no) + ": '" + cell + "' is not a number");
            }
            vals.push_back(v);
        }
        if (d < 0) d = static_cast<Eigen::Index>(vals.size());
        if (static_cast<Eigen::Index>(vals.size()) != d) {
            throw ConfigError("line " + std::to_string(line_no) + ": expected " + std::to_string(d) + " values");
        }
        rows.push_back(Eigen::Map<const Vector>(vals.data(), d));
    }
    if (rows.empty()) throw ConfigError("dataset file has no rows");
    return rows;
}

std::vector<Vector> read_vectors_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open '" + path + "'");
    return read_vectors_csv(in);
}

}  // namespace gddcm
