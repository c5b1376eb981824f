#ifndef WAVEFAULT_DTW_HPP
#define WAVEFAULT_DTW_HPP

#include <algorithm>
#include <cmath>
#include <concepts>
#include <cstddef>
#include <limits>
#include <optional>
#include <ranges>
#include <span>
#include <sstream>
#include <vector>

#include "wavefault/error.hpp"

namespace wavefault {

/// Sakoe-Chiba band half-width in samples: cell (i, j) is admissible iff
/// |i - j| <= width. Unset means unconstrained.
using Band = std::optional<std::size_t>;

/// One aligned index pair. Indices are 0-based: the path always starts at
/// (0, 0) and ends at (m - 1, n - 1).
struct IndexPair {
    std::size_t p = 0;
    std::size_t q = 0;
    friend bool operator==(const IndexPair&, const IndexPair&) = default;
};

struct WarpingPath {
    std::vector<IndexPair> pairs;
    std::size_t len_x = 0;
    std::size_t len_y = 0;

    std::size_t size() const { return pairs.size(); }
    friend bool operator==(const WarpingPath&, const WarpingPath&) = default;
};

struct DtwResult {
    double distance = 0.0;
    WarpingPath path;
};

/// True when the path starts at (0,0), ends at (m-1,n-1), advances by one of
/// the three unit steps and has a length within [max(m,n), m+n-1].
inline bool is_valid_path(const WarpingPath& w) {
    const auto m = w.len_x;
    const auto n = w.len_y;
    if (m == 0 || n == 0 || w.pairs.empty()) return false;
    if (w.pairs.front() != IndexPair{0, 0}) return false;
    if (w.pairs.back() != IndexPair{m - 1, n - 1}) return false;
    if (w.pairs.size() < std::max(m, n) || w.pairs.size() > m + n - 1) return false;
    for (std::size_t a = 1; a < w.pairs.size(); ++a) {
        const auto dp = w.pairs[a].p - w.pairs[a - 1].p;
        const auto dq = w.pairs[a].q - w.pairs[a - 1].q;
        const bool ok = (dp == 1 && dq == 0) || (dp == 0 && dq == 1) || (dp == 1 && dq == 1);
        if (!ok || w.pairs[a].p < w.pairs[a - 1].p || w.pairs[a].q < w.pairs[a - 1].q) return false;
    }
    return true;
}

/// Widens a band to the length difference so that a path always exists.
/// Used where sequences of arbitrary lengths are compared in bulk.
inline Band effective_band(const Band& band, std::size_t m, std::size_t n) {
    if (!band) return std::nullopt;
    return std::max(*band, m > n ? m - n : n - m);
}

template <typename R>
concept SampleRange = std::ranges::contiguous_range<R> && std::ranges::sized_range<R> &&
                      std::is_arithmetic_v<std::ranges::range_value_t<R>>;

namespace detail {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

inline void check_dtw_inputs(std::size_t m, std::size_t n, const Band& band) {
    if (m == 0 || n == 0) throw Error(ErrorKind::EmptyInput, "dtw needs non-empty sequences");
    const std::size_t diff = m > n ? m - n : n - m;
    if (band && *band < diff) {
        std::ostringstream os;
        os << "band " << *band << " < |m - n| = " << diff;
        throw Error(ErrorKind::BandTooNarrow, os.str());
    }
}

struct RowSpan {
    std::size_t lo;
    std::size_t hi; // inclusive
};

inline RowSpan row_span(std::size_t i, std::size_t n, const Band& band) {
    if (!band) return {0, n - 1};
    const std::size_t lo = i > *band ? i - *band : 0;
    const std::size_t hi = std::min(n - 1, i + *band);
    return {lo, hi};
}

template <typename T, typename U>
inline double sq_diff(T a, U b) {
    const double d = static_cast<double>(a) - static_cast<double>(b);
    return d * d;
}

/// Two-row accumulation of squared differences. Returns the accumulated
/// (squared) cost, or +inf once the distance of an entire row exceeds `cutoff`.
template <typename T, typename U>
double accumulate_two_rows(std::span<const T> x, std::span<const U> y, const Band& band, double cutoff) {
    const std::size_t m = x.size();
    const std::size_t n = y.size();
    std::vector<double> prev(n, kInf);
    std::vector<double> cur(n, kInf);

    for (std::size_t i = 0; i < m; ++i) {
        const auto [lo, hi] = row_span(i, n, band);
        if (lo > 0) cur[lo - 1] = kInf;
        if (hi + 1 < n) cur[hi + 1] = kInf;
        const double xi = static_cast<double>(x[i]);
        double row_min;
        if (i == 0) {
            cur[0] = sq_diff(xi, y[0]);
            for (std::size_t j = 1; j <= hi; ++j) cur[j] = sq_diff(xi, y[j]) + cur[j - 1];
            row_min = cur[0];
        } else {
            double left = lo > 0 ? std::min(prev[lo - 1], prev[lo]) : prev[lo];
            cur[lo] = sq_diff(xi, y[lo]) + left;
            row_min = cur[lo];
            for (std::size_t j = lo + 1; j <= hi; ++j) {
                const double best = std::min(prev[j - 1], std::min(prev[j], cur[j - 1]));
                cur[j] = sq_diff(xi, y[j]) + best;
                row_min = std::min(row_min, cur[j]);
            }
        }
        // compared as a distance: squaring the cutoff could round below a
        // cost whose root equals it
        if (std::sqrt(row_min) > cutoff) return kInf;
        std::swap(prev, cur);
    }
    return prev[n - 1];
}

} // namespace detail

/// DTW with warping path. The accumulated cost is the sum of squared aligned
/// differences; the returned distance is its square root. Among equal-cost
/// predecessors the path prefers the diagonal step, then the step advancing
/// x, then the step advancing y.
template <typename T, typename U>
DtwResult dtw(std::span<const T> x, std::span<const U> y, const Band& band = std::nullopt) {
    const std::size_t m = x.size();
    const std::size_t n = y.size();
    detail::check_dtw_inputs(m, n, band);

    std::vector<double> acc(m * n, detail::kInf);
    auto at = [&](std::size_t i, std::size_t j) -> double& { return acc[i * n + j]; };

    for (std::size_t i = 0; i < m; ++i) {
        const auto [lo, hi] = detail::row_span(i, n, band);
        const double xi = static_cast<double>(x[i]);
        for (std::size_t j = lo; j <= hi; ++j) {
            const double c = detail::sq_diff(xi, y[j]);
            double best;
            if (i == 0 && j == 0) {
                best = 0.0;
            } else {
                const double diag = (i > 0 && j > 0) ? at(i - 1, j - 1) : detail::kInf;
                const double up = i > 0 ? at(i - 1, j) : detail::kInf;
                const double left = j > 0 ? at(i, j - 1) : detail::kInf;
                best = std::min(diag, std::min(up, left));
            }
            at(i, j) = c + best;
        }
    }

    DtwResult result;
    result.distance = std::sqrt(at(m - 1, n - 1));
    auto& pairs = result.path.pairs;
    pairs.reserve(m + n - 1);
    std::size_t i = m - 1;
    std::size_t j = n - 1;
    pairs.push_back({i, j});
    while (i > 0 || j > 0) {
        if (i == 0) {
            --j;
        } else if (j == 0) {
            --i;
        } else {
            const double diag = at(i - 1, j - 1);
            const double up = at(i - 1, j);
            const double left = at(i, j - 1);
            if (diag <= up && diag <= left) {
                --i;
                --j;
            } else if (up <= left) {
                --i;
            } else {
                --j;
            }
        }
        pairs.push_back({i, j});
    }
    std::reverse(pairs.begin(), pairs.end());
    result.path.len_x = m;
    result.path.len_y = n;
    return result;
}

/// Same distance as dtw(), computed with two rows of storage.
template <typename T, typename U>
double dtw_distance_only(std::span<const T> x, std::span<const U> y, const Band& band = std::nullopt) {
    detail::check_dtw_inputs(x.size(), y.size(), band);
    return std::sqrt(detail::accumulate_two_rows(x, y, band, detail::kInf));
}

/// Early-abandoning variant for nearest-neighbour search: returns +inf as soon
/// as the distance is certain to exceed `cutoff`, otherwise the exact distance.
template <typename T, typename U>
double dtw_distance_bounded(std::span<const T> x, std::span<const U> y, const Band& band, double cutoff) {
    detail::check_dtw_inputs(x.size(), y.size(), band);
    return std::sqrt(detail::accumulate_two_rows(x, y, band, cutoff));
}

template <SampleRange A, SampleRange B>
DtwResult dtw(const A& x, const B& y, const Band& band = std::nullopt) {
    return dtw(std::span<const std::ranges::range_value_t<A>>(std::ranges::data(x), std::ranges::size(x)),
               std::span<const std::ranges::range_value_t<B>>(std::ranges::data(y), std::ranges::size(y)), band);
}

template <SampleRange A, SampleRange B>
double dtw_distance_only(const A& x, const B& y, const Band& band = std::nullopt) {
    return dtw_distance_only(
        std::span<const std::ranges::range_value_t<A>>(std::ranges::data(x), std::ranges::size(x)),
        std::span<const std::ranges::range_value_t<B>>(std::ranges::data(y), std::ranges::size(y)), band);
}

template <SampleRange A, SampleRange B>
double dtw_distance_bounded(const A& x, const B& y, const Band& band, double cutoff) {
    return dtw_distance_bounded(
        std::span<const std::ranges::range_value_t<A>>(std::ranges::data(x), std::ranges::size(x)),
        std::span<const std::ranges::range_value_t<B>>(std::ranges::data(y), std::ranges::size(y)), band, cutoff);
}

/// Square root of the summed squared differences along a given path.
template <SampleRange A, SampleRange B>
double path_cost(const A& x, const B& y, const WarpingPath& path) {
    double sum = 0.0;
    for (const auto& [p, q] : path.pairs) sum += detail::sq_diff(x[p], y[q]);
    return std::sqrt(sum);
}

/// Lock-step distance; needs equal lengths.
template <SampleRange A, SampleRange B>
double euclidean_distance(const A& x, const B& y) {
    if (std::ranges::size(x) != std::ranges::size(y)) {
        throw Error(ErrorKind::LengthMismatch, "euclidean distance needs equal lengths");
    }
    double sum = 0.0;
    for (std::size_t i = 0; i < std::ranges::size(x); ++i) sum += detail::sq_diff(x[i], y[i]);
    return std::sqrt(sum);
}

} // namespace wavefault

#endif // WAVEFAULT_DTW_HPP
