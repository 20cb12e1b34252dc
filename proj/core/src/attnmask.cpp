#include "reflow/attnmask.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>
#include <utility>

namespace reflow {

namespace {

void check_shape(int height, int width, std::size_t count, const char* what) {
    if (height < 1 || width < 1) {
        throw Error(ErrorCode::invalid_argument,
                    std::string(what) + ": height and width must be positive");
    }
    if (count != static_cast<std::size_t>(height) * static_cast<std::size_t>(width)) {
        throw Error(ErrorCode::dimension_mismatch,
                    std::string(what) + ": value count does not match height*width");
    }
}

void check_same_shape(const AttentionMap& a, const AttentionMap& b, const char* where) {
    if (a.height() != b.height() || a.width() != b.width()) {
        throw Error(ErrorCode::dimension_mismatch,
                    std::string(where) + ": map shapes differ");
    }
}

double logistic(double x) { return 1.0 / (1.0 + std::exp(-x)); }

}  // namespace

AttentionMap::AttentionMap(int height, int width, std::vector<double> values)
    : height_(height), width_(width), values_(std::move(values)) {
    check_shape(height_, width_, values_.size(), "AttentionMap");
    for (double v : values_) {
        if (!std::isfinite(v) || v < 0.0) {
            throw Error(ErrorCode::invalid_argument,
                        "AttentionMap entries must be finite and nonnegative");
        }
    }
}

AttentionMap AttentionMap::constant(int height, int width, double value) {
    return AttentionMap(
        height, width,
        std::vector<double>(static_cast<std::size_t>(height) * width, value));
}

AttentionStack::AttentionStack(std::vector<AttentionMap> maps, int step_index)
    : maps_(std::move(maps)), step_index_(step_index) {
    if (maps_.size() < 2) {
        throw Error(ErrorCode::invalid_argument, "AttentionStack needs at least two maps");
    }
    for (const AttentionMap& m : maps_) {
        check_same_shape(m, maps_.front(), "AttentionStack");
    }
}

void MaskParams::validate() const {
    if (window_lo < 1 || window_lo >= window_hi) {
        throw Error(ErrorCode::window_out_of_range,
                    "mask window must satisfy 1 <= lo < hi");
    }
    if (!std::isfinite(tau)) {
        throw Error(ErrorCode::invalid_argument, "tau must be finite");
    }
    if (!std::isfinite(h_factor) || !std::isfinite(r_factor) || r_factor <= 0.0 ||
        h_factor <= r_factor) {
        throw Error(ErrorCode::invalid_argument,
                    "mask factors must satisfy h_factor > r_factor > 0");
    }
}

int Mask::h_count() const {
    return static_cast<int>(std::count(values.begin(), values.end(), h_factor));
}

int Mask::r_count() const {
    return static_cast<int>(std::count(values.begin(), values.end(), r_factor));
}

RealMatrix::RealMatrix(int rows_in, int cols_in, std::vector<double> values_in)
    : rows(rows_in), cols(cols_in), values(std::move(values_in)) {
    check_shape(rows, cols, values.size(), "RealMatrix");
    for (double v : values) {
        if (!std::isfinite(v)) {
            throw Error(ErrorCode::invalid_argument, "RealMatrix entries must be finite");
        }
    }
}

AttentionMap softmax_attention(const RealMatrix& q_rows, const RealMatrix& k_rows,
                               int head_dim) {
    if (head_dim < 1) {
        throw Error(ErrorCode::invalid_argument, "head_dim must be positive");
    }
    if (q_rows.cols != k_rows.cols) {
        throw Error(ErrorCode::dimension_mismatch,
                    "softmax_attention: query and key inner dimensions differ");
    }
    const int h = q_rows.rows;
    const int w = k_rows.rows;
    const double scale = 1.0 / std::sqrt(static_cast<double>(head_dim));

    std::vector<double> out(static_cast<std::size_t>(h) * w);
    std::vector<double> logits(static_cast<std::size_t>(w));
    for (int row = 0; row < h; ++row) {
        double max_logit = -std::numeric_limits<double>::infinity();
        for (int col = 0; col < w; ++col) {
            double dot = 0.0;
            for (int k = 0; k < q_rows.cols; ++k) {
                dot += q_rows.at(row, k) * k_rows.at(col, k);
            }
            logits[static_cast<std::size_t>(col)] = dot * scale;
            max_logit = std::max(max_logit, logits[static_cast<std::size_t>(col)]);
        }
        double denom = 0.0;
        for (int col = 0; col < w; ++col) {
            logits[static_cast<std::size_t>(col)] =
                std::exp(logits[static_cast<std::size_t>(col)] - max_logit);
            denom += logits[static_cast<std::size_t>(col)];
        }
        for (int col = 0; col < w; ++col) {
            out[static_cast<std::size_t>(row) * w + col] =
                logits[static_cast<std::size_t>(col)] / denom;
        }
    }
    return AttentionMap(h, w, std::move(out));
}

AttentionMap rescale_map(const AttentionMap& m) {
    const auto [lo_it, hi_it] = std::minmax_element(m.values().begin(), m.values().end());
    const double lo = *lo_it;
    const double hi = *hi_it;

    std::vector<double> out(m.values().size());
    if (hi - lo < 1e-12) {
        std::fill(out.begin(), out.end(), 0.5);
    } else {
        const double inv_range = 1.0 / (hi - lo);
        for (std::size_t i = 0; i < out.size(); ++i) {
            const double normalized = (m.values()[i] - lo) * inv_range;
            out[i] = logistic(10.0 * (normalized - 0.5));
        }
    }
    return AttentionMap(m.height(), m.width(), std::move(out));
}

double activation(const AttentionMap& m) {
    return std::accumulate(m.values().begin(), m.values().end(), 0.0);
}

std::vector<AttentionMap> sort_select(const AttentionStack& stack, int window_lo,
                                      int window_hi) {
    const int k = stack.size();
    if (window_lo < 1 || window_lo >= window_hi || window_hi > k) {
        throw Error(ErrorCode::window_out_of_range,
                    "selection window must satisfy 1 <= lo < hi <= stack size");
    }

    std::vector<double> keys(static_cast<std::size_t>(k));
    for (int i = 0; i < k; ++i) keys[static_cast<std::size_t>(i)] = activation(stack.maps()[static_cast<std::size_t>(i)]);

    std::vector<int> order(static_cast<std::size_t>(k));
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
        return keys[static_cast<std::size_t>(a)] < keys[static_cast<std::size_t>(b)];
    });

    std::vector<AttentionMap> selected;
    selected.reserve(static_cast<std::size_t>(window_hi - window_lo + 1));
    for (int pos = window_lo - 1; pos < window_hi; ++pos) {
        selected.push_back(stack.maps()[static_cast<std::size_t>(order[static_cast<std::size_t>(pos)])]);
    }
    return selected;
}

AttentionMap average_window(const std::vector<AttentionMap>& selected) {
    if (selected.empty()) {
        throw Error(ErrorCode::empty_selection, "average_window needs at least one map");
    }
    const AttentionMap& first = selected.front();
    std::vector<double> acc(first.values().size(), 0.0);
    for (const AttentionMap& m : selected) {
        check_same_shape(m, first, "average_window");
        for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += m.values()[i];
    }
    const double inv = 1.0 / static_cast<double>(selected.size());
    for (double& v : acc) v *= inv;
    return AttentionMap(first.height(), first.width(), std::move(acc));
}

Mask threshold_mask(const AttentionMap& avg, const MaskParams& params) {
    params.validate();
    std::vector<double> out(avg.values().size());
    for (std::size_t i = 0; i < out.size(); ++i) {
        out[i] = avg.values()[i] >= params.tau ? params.h_factor : params.r_factor;
    }
    return Mask{avg.height(), avg.width(), std::move(out), params.h_factor, params.r_factor};
}

AttentionMap apply_mask(const AttentionMap& next_map, const Mask& mask, bool bypass) {
    if (next_map.height() != mask.height || next_map.width() != mask.width) {
        throw Error(ErrorCode::dimension_mismatch, "apply_mask: map and mask shapes differ");
    }
    if (bypass) return next_map;
    std::vector<double> out(next_map.values().size());
    for (std::size_t i = 0; i < out.size(); ++i) {
        out[i] = next_map.values()[i] * mask.values[i];
    }
    return AttentionMap(next_map.height(), next_map.width(), std::move(out));
}

PipelineResult pipeline(const AttentionStack& stack, const MaskParams& params,
                        const AttentionStack& next_stack) {
    params.validate();
    if (stack.height() != next_stack.height() || stack.width() != next_stack.width()) {
        throw Error(ErrorCode::dimension_mismatch,
                    "pipeline: stack and next_stack shapes differ");
    }
    const int k = stack.size();
    if (params.window_hi > k) {
        throw Error(ErrorCode::window_out_of_range,
                    "selection window exceeds stack size");
    }

    std::vector<AttentionMap> rescaled;
    rescaled.reserve(static_cast<std::size_t>(k));
    for (const AttentionMap& m : stack.maps()) rescaled.push_back(rescale_map(m));

    std::vector<double> keys(static_cast<std::size_t>(k));
    for (int i = 0; i < k; ++i) {
        keys[static_cast<std::size_t>(i)] = params.rank_on_raw
                                                ? activation(stack.maps()[static_cast<std::size_t>(i)])
                                                : activation(rescaled[static_cast<std::size_t>(i)]);
    }
    std::vector<int> order(static_cast<std::size_t>(k));
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
        return keys[static_cast<std::size_t>(a)] < keys[static_cast<std::size_t>(b)];
    });

    std::vector<AttentionMap> selected;
    selected.reserve(static_cast<std::size_t>(params.window_hi - params.window_lo + 1));
    for (int pos = params.window_lo - 1; pos < params.window_hi; ++pos) {
        selected.push_back(rescaled[static_cast<std::size_t>(order[static_cast<std::size_t>(pos)])]);
    }

    Mask mask = threshold_mask(average_window(selected), params);

    std::vector<AttentionMap> modulated;
    modulated.reserve(next_stack.maps().size());
    for (const AttentionMap& m : next_stack.maps()) {
        modulated.push_back(apply_mask(m, mask));
    }
    return PipelineResult{std::move(mask),
                          AttentionStack(std::move(modulated), next_stack.step_index())};
}

}  // namespace reflow
