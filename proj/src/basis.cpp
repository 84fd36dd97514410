#include "hslift/basis.hpp"

#include <cmath>
#include <numeric>

#include "hslift/errors.hpp"

namespace hslift {

MultiIndex::MultiIndex(std::vector<int> entries) : entries_(std::move(entries)) {
  for (int e : entries_) {
    if (e < 0) throw ConfigError("multi-index entries must be non-negative");
  }
}

int MultiIndex::order() const noexcept {
  return std::accumulate(entries_.begin(), entries_.end(), 0);
}

std::optional<MultiIndex> MultiIndex::shifted(std::size_t axis, int delta) const {
  std::vector<int> e = entries_;
  e.at(axis) += delta;
  if (e[axis] < 0) return std::nullopt;
  return MultiIndex(std::move(e));
}

double binomial(int n, int k) {
  if (k < 0 || k > n) return 0.0;
  k = std::min(k, n - k);
  double r = 1.0;
  for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return std::round(r);
}

namespace {

void compositions(int dim, int remaining, std::vector<int>& prefix, std::vector<MultiIndex>& out) {
  const auto slot = prefix.size();
  if (slot + 1 == static_cast<std::size_t>(dim)) {
    prefix.push_back(remaining);
    out.emplace_back(prefix);
    prefix.pop_back();
    return;
  }
  for (int v = 0; v <= remaining; ++v) {
    prefix.push_back(v);
    compositions(dim, remaining - v, prefix, out);
    prefix.pop_back();
  }
}

}  // namespace

std::vector<MultiIndex> enumerate_shell(int dim, int k) {
  if (dim < 1) throw ConfigError("dimension must be >= 1");
  if (k < 0) return {};
  std::vector<MultiIndex> out;
  std::vector<int> prefix;
  prefix.reserve(static_cast<std::size_t>(dim));
  compositions(dim, k, prefix, out);
  return out;
}

std::vector<MultiIndex> enumerate_basis(const BasisSpec& spec) {
  if (spec.dim < 1) throw ConfigError("dimension must be >= 1");
  if (spec.max_degree < 0) throw ConfigError("max degree must be >= 0");
  std::vector<MultiIndex> out;
  out.reserve(static_cast<std::size_t>(binomial(spec.max_degree + spec.dim, spec.dim)));
  for (int k = 0; k <= spec.max_degree; ++k) {
    auto shell = enumerate_shell(spec.dim, k);
    out.insert(out.end(), std::make_move_iterator(shell.begin()),
               std::make_move_iterator(shell.end()));
  }
  return out;
}

Basis::Basis(const BasisSpec& spec) : spec_(spec), indices_(enumerate_basis(spec)) {
  orders_.reserve(indices_.size());
  for (std::size_t r = 0; r < indices_.size(); ++r) {
    orders_.push_back(indices_[r].order());
    ranks_.emplace(indices_[r].entries(), r);
  }
}

std::shared_ptr<const Basis> Basis::make(int dim, int max_degree) {
  return std::shared_ptr<const Basis>(new Basis(BasisSpec{dim, max_degree}));
}

std::optional<std::size_t> Basis::rank_of(const MultiIndex& n) const {
  if (n.dim() != static_cast<std::size_t>(spec_.dim)) return std::nullopt;
  auto it = ranks_.find(n.entries());
  if (it == ranks_.end()) return std::nullopt;
  return it->second;
}

}  // namespace hslift
