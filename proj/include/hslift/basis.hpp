#pragma once

#include <cstddef>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <vector>

namespace hslift {

/// Multi-index n = (n_1, ..., n_d) labelling the tensor Hermite function h_n.
class MultiIndex {
 public:
  MultiIndex() = default;
  explicit MultiIndex(std::vector<int> entries);

  std::size_t dim() const noexcept { return entries_.size(); }
  int operator[](std::size_t i) const { return entries_[i]; }
  const std::vector<int>& entries() const noexcept { return entries_; }

  /// |n| = n_1 + ... + n_d.
  int order() const noexcept;

  /// n + delta * e_axis, or nullopt when an entry would become negative
  /// (h_n is identically zero in that case).
  std::optional<MultiIndex> shifted(std::size_t axis, int delta) const;

  friend bool operator==(const MultiIndex&, const MultiIndex&) = default;
  friend auto operator<=>(const MultiIndex&, const MultiIndex&) = default;

 private:
  std::vector<int> entries_;
};

/// Truncation of the Hermite basis to total degree |n| <= max_degree.
struct BasisSpec {
  int dim = 1;
  int max_degree = 0;

  friend bool operator==(const BasisSpec&, const BasisSpec&) = default;
};

/// All n with |n| == k in lexicographic order; size binomial(k+d-1, d-1).
std::vector<MultiIndex> enumerate_shell(int dim, int k);

/// All n with |n| <= N, ordered by |n| and lexicographically within a shell.
std::vector<MultiIndex> enumerate_basis(const BasisSpec& spec);

/// binomial(n, k) as a double; exact for the sizes used here.
double binomial(int n, int k);

/// Materialized truncated basis with rank lookup. Immutable, shared by
/// pointer between every vector and operator built on it.
class Basis {
 public:
  static std::shared_ptr<const Basis> make(int dim, int max_degree);
  static std::shared_ptr<const Basis> make(const BasisSpec& spec) {
    return make(spec.dim, spec.max_degree);
  }

  const BasisSpec& spec() const noexcept { return spec_; }
  int dim() const noexcept { return spec_.dim; }
  int max_degree() const noexcept { return spec_.max_degree; }
  std::size_t size() const noexcept { return indices_.size(); }

  const MultiIndex& index(std::size_t rank) const { return indices_[rank]; }
  const std::vector<MultiIndex>& indices() const noexcept { return indices_; }
  int order(std::size_t rank) const { return orders_[rank]; }

  std::optional<std::size_t> rank_of(const MultiIndex& n) const;

  /// 2|n| + d, the eigenvalue of the harmonic oscillator on h_n.
  double shell_weight(std::size_t rank) const {
    return 2.0 * orders_[rank] + spec_.dim;
  }

 private:
  explicit Basis(const BasisSpec& spec);

  BasisSpec spec_;
  std::vector<MultiIndex> indices_;
  std::vector<int> orders_;
  std::map<std::vector<int>, std::size_t> ranks_;
};

using BasisPtr = std::shared_ptr<const Basis>;

}  // namespace hslift
