#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "stylip/tape.hpp"

namespace stylip::ops {

// Denominator floor for cosine similarity.
inline constexpr double kNormEpsilon = 1e-12;

Var matmul(Var a, Var b);              // [m x k] . [k x n]
Var transpose(Var a);                  // 2-D only
Var add(Var a, Var b);                 // identical shapes
Var sub(Var a, Var b);
Var mul(Var a, Var b);                 // elementwise
Var scale(Var a, double factor);
Var add_bias(Var a, Var bias);         // bias [n] added to every row of [.. x n]
Var tanh(Var a);
Var maximum(Var a, Var b);             // elementwise; ties route the gradient to `a`
Var sum(Var a);
Var mean(Var a);
Var dot(Var u, Var v);                 // 1-D, scalar result
Var reshape(Var a, Shape shape);
Var concat(std::span<const Var> parts, std::size_t axis);
Var slice(Var a, std::size_t begin, std::size_t end);  // 1-D
Var pick(Var a, std::size_t index);    // scalar element of a flat tensor
Var mean_rows(Var a);                  // [m x n] -> [n]
Var row(Var a, std::size_t index);     // [m x n] -> [n]

/// Means of consecutive groups of `block` rows: [g*block x n] -> [g x n].
Var block_mean_rows(Var a, std::size_t block);

/// Self-attention applied independently to each run of `block` rows:
/// out_g = softmax(scale * Q_g K_g^T) V_g.
Var block_attention(Var q, Var k, Var v, std::size_t block, double scale);

/// Per-pixel channel mixing of a W x H x C map by a C x C' kernel.
Var conv1x1(Var fmap, Var kernel);

/// u.v / (|u| |v|); throws DegenerateInputError when either norm is below kNormEpsilon.
Var cosine_similarity(Var u, Var v);

Var softmax(Var logits);               // 1-D, max-subtracted
Var log_softmax(Var logits);           // 1-D
Var softmax_rows(Var logits);          // 2-D, one distribution per row

}  // namespace stylip::ops
