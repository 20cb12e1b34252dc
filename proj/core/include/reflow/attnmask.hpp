#pragma once

#include <vector>

#include "reflow/errors.hpp"

namespace reflow {

// Dense row-major H x W grid of nonnegative finite values.
class AttentionMap {
public:
    AttentionMap(int height, int width, std::vector<double> values);
    static AttentionMap constant(int height, int width, double value);

    int height() const { return height_; }
    int width() const { return width_; }
    double at(int row, int col) const {
        return values_[static_cast<std::size_t>(row) * width_ + col];
    }
    const std::vector<double>& values() const { return values_; }

private:
    int height_;
    int width_;
    std::vector<double> values_;
};

// K >= 2 same-shaped maps observed at one step of a run.
class AttentionStack {
public:
    explicit AttentionStack(std::vector<AttentionMap> maps, int step_index = 0);

    const std::vector<AttentionMap>& maps() const { return maps_; }
    int size() const { return static_cast<int>(maps_.size()); }
    int height() const { return maps_.front().height(); }
    int width() const { return maps_.front().width(); }
    int step_index() const { return step_index_; }

private:
    std::vector<AttentionMap> maps_;
    int step_index_;
};

struct MaskParams {
    // 1-based inclusive window into the activation-sorted stack.
    int window_lo = 10;
    int window_hi = 14;
    double tau = 0.5;
    double h_factor = 2.0;
    double r_factor = 0.8;
    // Rank maps by raw activation instead of rescaled activation. The rescale is
    // per-map min-max, so the two orderings can differ.
    bool rank_on_raw = false;

    void validate() const;
};

// Two-valued H x W grid; every entry is exactly h_factor or r_factor.
struct Mask {
    int height;
    int width;
    std::vector<double> values;
    double h_factor;
    double r_factor;

    double at(int row, int col) const {
        return values[static_cast<std::size_t>(row) * width + col];
    }
    int h_count() const;
    int r_count() const;
};

// Row-major matrix of finite reals; query/key inputs to softmax_attention.
struct RealMatrix {
    RealMatrix(int rows, int cols, std::vector<double> values);

    int rows;
    int cols;
    std::vector<double> values;

    double at(int row, int col) const {
        return values[static_cast<std::size_t>(row) * cols + col];
    }
};

// Row-wise softmax of Q * K^T / sqrt(head_dim). Q is H x d, K is W x d.
AttentionMap softmax_attention(const RealMatrix& q_rows, const RealMatrix& k_rows,
                               int head_dim);

// Min-max normalize to [0, 1], then logistic sigma(10 * (x - 0.5)), squashing every
// entry into (sigma(-5), sigma(5)). A map with range below 1e-12 maps to all 0.5.
AttentionMap rescale_map(const AttentionMap& m);

// Sum of all entries; the global-vs-detail ranking key.
double activation(const AttentionMap& m);

// Maps at positions window_lo..window_hi (1-based, inclusive) of the stack sorted by
// ascending activation; ties keep original stack order.
std::vector<AttentionMap> sort_select(const AttentionStack& stack, int window_lo,
                                      int window_hi);

// Elementwise arithmetic mean of same-shaped maps.
AttentionMap average_window(const std::vector<AttentionMap>& selected);

// Entry >= tau picks h_factor, otherwise r_factor. The boundary is inclusive.
Mask threshold_mask(const AttentionMap& avg, const MaskParams& params);

// Elementwise product. Rows no longer sum to 1 afterwards; masking happens after the
// softmax and nothing renormalizes. `bypass` skips the modulation, returning the map
// unchanged (shape still checked).
AttentionMap apply_mask(const AttentionMap& next_map, const Mask& mask, bool bypass = false);

struct PipelineResult {
    Mask mask;
    AttentionStack modulated;
};

// rescale all -> rank by activation -> select window -> average -> threshold -> apply
// the mask to every map of next_stack.
PipelineResult pipeline(const AttentionStack& stack, const MaskParams& params,
                        const AttentionStack& next_stack);

}  // namespace reflow
