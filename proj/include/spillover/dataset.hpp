#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <fstream>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

#include <Eigen/Dense>

#include "spillover/error.hpp"

namespace spillover {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// An n x m matrix of real features, one row per sample.
///
/// Construction validates the invariants: at least two samples, at least one
/// feature, every entry finite and sample identifiers unique.
class Dataset {
public:
    Dataset() = default;

    explicit Dataset(Matrix values, std::vector<std::string> feature_names = {},
                     std::vector<std::size_t> sample_ids = {})
        : values_(std::move(values)),
          feature_names_(std::move(feature_names)),
          sample_ids_(std::move(sample_ids)) {
        if (sample_ids_.empty()) {
            sample_ids_.resize(static_cast<std::size_t>(values_.rows()));
            for (std::size_t i = 0; i < sample_ids_.size(); ++i) sample_ids_[i] = i;
        }
        validate();
    }

    [[nodiscard]] const Matrix& values() const noexcept { return values_; }
    [[nodiscard]] std::size_t rows() const noexcept { return static_cast<std::size_t>(values_.rows()); }
    [[nodiscard]] std::size_t cols() const noexcept { return static_cast<std::size_t>(values_.cols()); }
    [[nodiscard]] const std::vector<std::string>& feature_names() const noexcept { return feature_names_; }
    [[nodiscard]] const std::vector<std::size_t>& sample_ids() const noexcept { return sample_ids_; }

    [[nodiscard]] Vector row(std::size_t i) const { return values_.row(static_cast<Eigen::Index>(i)).transpose(); }

    /// Copy of this dataset with row `i` replaced by `replacement`.
    [[nodiscard]] Dataset with_row(std::size_t i, const Vector& replacement) const {
        Dataset out = *this;
        if (replacement.size() != values_.cols()) throw DataError("with_row: replacement has wrong dimension");
        if (!replacement.allFinite()) throw DataError("with_row: replacement contains non-finite values");
        out.values_.row(static_cast<Eigen::Index>(i)) = replacement.transpose();
        return out;
    }

private:
    void validate() const {
        if (values_.rows() < 2) throw DataError("dataset needs at least 2 samples");
        if (values_.cols() < 1) throw DataError("dataset needs at least 1 feature");
        if (!values_.allFinite()) throw DataError("dataset contains non-finite values");
        if (!feature_names_.empty() && feature_names_.size() != cols())
            throw DataError("feature_names length does not match column count");
        if (sample_ids_.size() != rows()) throw DataError("sample_ids length does not match row count");
        std::unordered_set<std::size_t> seen(sample_ids_.begin(), sample_ids_.end());
        if (seen.size() != sample_ids_.size()) throw DataError("sample_ids are not unique");
    }

    Matrix values_;
    std::vector<std::string> feature_names_;
    std::vector<std::size_t> sample_ids_;
};

/// Isotropic Gaussian cluster used for synthetic data.
struct GaussianSpec {
    Vector center;
    double stddev = 1.0;
    std::size_t count = 1;
};

namespace detail {

inline std::vector<std::string_view> split_commas(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        const auto pos = line.find(',', start);
        if (pos == std::string_view::npos) {
            out.push_back(line.substr(start));
            break;
        }
        out.push_back(line.substr(start, pos - start));
        start = pos + 1;
    }
    return out;
}

inline std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

inline std::optional<double> parse_real(std::string_view cell) {
    cell = trim(cell);
    if (cell.empty()) return std::nullopt;
    std::string tmp(cell);
    std::size_t used = 0;
    double v = 0.0;
    try {
        v = std::stod(tmp, &used);
    } catch (const std::exception&) {
        return std::nullopt;
    }
    if (used != tmp.size() || !std::isfinite(v)) return std::nullopt;
    return v;
}

}  // namespace detail

/// Parses comma-separated numeric text. Row/column numbers in errors are
/// 0-based and count data rows only (the header is not counted).
inline Dataset parse_csv(std::istream& in, bool has_header) {
    std::string line;
    std::vector<std::string> names;
    std::vector<std::vector<double>> rows;
    bool header_pending = has_header;
    while (std::getline(in, line)) {
        const auto trimmed = detail::trim(line);
        if (trimmed.empty()) continue;
        const auto cells = detail::split_commas(trimmed);
        if (header_pending) {
            for (const auto c : cells) names.emplace_back(detail::trim(c));
            header_pending = false;
            continue;
        }
        const std::size_t r = rows.size();
        if (!rows.empty() && cells.size() != rows.front().size()) {
            throw DataError("ragged CSV: row " + std::to_string(r) + " has " + std::to_string(cells.size()) +
                            " columns, expected " + std::to_string(rows.front().size()));
        }
        std::vector<double> vals;
        vals.reserve(cells.size());
        for (std::size_t c = 0; c < cells.size(); ++c) {
            const auto v = detail::parse_real(cells[c]);
            if (!v) {
                throw DataError("CSV parse error at row " + std::to_string(r) + ", col " + std::to_string(c) +
                                ": '" + std::string(detail::trim(cells[c])) + "'");
            }
            vals.push_back(*v);
        }
        rows.push_back(std::move(vals));
    }
    if (rows.empty()) throw DataError("CSV contains no data rows");
    if (!names.empty() && names.size() != rows.front().size())
        throw DataError("CSV header has " + std::to_string(names.size()) + " columns, data has " +
                        std::to_string(rows.front().size()));
    Matrix values(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.front().size()));
    for (std::size_t r = 0; r < rows.size(); ++r)
        for (std::size_t c = 0; c < rows[r].size(); ++c)
            values(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = rows[r][c];
    return Dataset(std::move(values), std::move(names));
}

inline Dataset load_csv(const std::string& path, bool has_header) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open CSV file: " + path);
    return parse_csv(in, has_header);
}

/// Draws `count` i.i.d. isotropic samples per spec, concatenated in spec order.
inline Dataset synth_gaussians(const std::vector<GaussianSpec>& specs, std::uint64_t seed) {
    if (specs.empty()) throw ConfigError("synth_gaussians: no specs given");
    const auto m = specs.front().center.size();
    std::size_t total = 0;
    for (const auto& s : specs) {
        if (s.center.size() != m) throw ConfigError("synth_gaussians: dimension mismatch across specs");
        if (!(s.stddev > 0.0)) throw ConfigError("synth_gaussians: stddev must be positive");
        if (s.count < 1) throw ConfigError("synth_gaussians: count must be >= 1");
        total += s.count;
    }
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    Matrix values(static_cast<Eigen::Index>(total), m);
    Eigen::Index r = 0;
    for (const auto& s : specs) {
        for (std::size_t k = 0; k < s.count; ++k, ++r)
            for (Eigen::Index j = 0; j < m; ++j) values(r, j) = s.center(j) + s.stddev * normal(rng);
    }
    return Dataset(std::move(values));
}

/// The two-Gaussian toy configuration: broad cluster at (1,0), tight cluster at (5,0).
inline std::vector<GaussianSpec> toy_specs(std::size_t per_cluster = 100) {
    return {GaussianSpec{Vector{{1.0, 0.0}}, 1.45, per_cluster}, GaussianSpec{Vector{{5.0, 0.0}}, 0.75, per_cluster}};
}

/// Per-column unbiased standard deviation.
inline Vector column_stddev(const Matrix& values) {
    const Eigen::Index n = values.rows();
    const Vector mean = values.colwise().mean().transpose();
    Vector sd(values.cols());
    for (Eigen::Index j = 0; j < values.cols(); ++j) {
        const double ss = (values.col(j).array() - mean(j)).square().sum();
        sd(j) = n > 1 ? std::sqrt(ss / static_cast<double>(n - 1)) : 0.0;
    }
    return sd;
}

}  // namespace spillover
