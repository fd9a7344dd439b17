#include "difactor/jet.hpp"

#include <algorithm>
#include <limits>

#include "difactor/errors.hpp"

namespace difactor {

namespace {

constexpr std::uint64_t kSlotLimit = std::uint64_t{1} << 62;

void check_n(int n) {
  if (n < 1) throw InvalidIndex("independent-variable count must be positive");
}

}  // namespace

std::uint64_t slot_count(int n, int k) {
  check_n(n);
  if (k < 0) throw InvalidIndex("negative derivative order");
  std::uint64_t p = 1;
  for (int i = 0; i < k; ++i) {
    if (p > kSlotLimit / static_cast<std::uint64_t>(n)) {
      throw CapacityExceeded("n^k too large for n=" + std::to_string(n) +
                             ", k=" + std::to_string(k));
    }
    p *= static_cast<std::uint64_t>(n);
  }
  return p;
}

std::uint64_t jet_size(int n, int m, int s) {
  if (m < 1) throw InvalidIndex("dependent-variable count must be positive");
  if (s < 0) throw InvalidIndex("negative jet order");
  std::uint64_t total = 0;
  for (int k = 0; k <= s; ++k) {
    total += slot_count(n, k);
    if (total > kSlotLimit) throw CapacityExceeded("jet dimension too large");
  }
  if (total > kSlotLimit / static_cast<std::uint64_t>(m)) {
    throw CapacityExceeded("jet dimension too large");
  }
  return total * static_cast<std::uint64_t>(m);
}

DerivIndex DerivIndex::make(int n, int order, std::uint64_t slot) {
  check_n(n);
  if (order < 0) throw InvalidIndex("negative derivative order");
  const auto p = slot_count(n, order);
  if (slot < 1 || slot > p) {
    throw InvalidIndex("slot " + std::to_string(slot) + " out of range [1," +
                       std::to_string(p) + "] for order " + std::to_string(order));
  }
  return DerivIndex{n, order, slot};
}

std::string to_string(const DerivIndex& d) {
  return "(" + std::to_string(d.order) + "," + std::to_string(d.slot) + ")";
}

int MultiIndex::order() const {
  int s = 0;
  for (int c : counts) s += c;
  return s;
}

DerivIndex compose_index(Axis outer, const DerivIndex& inner) {
  if (outer < 1 || outer > inner.n) throw InvalidIndex("axis out of range");
  const auto p = slot_count(inner.n, inner.order + 1);
  const auto slot = static_cast<std::uint64_t>(inner.n) * (inner.slot - 1) +
                    static_cast<std::uint64_t>(outer);
  if (slot > p) throw InvalidIndex("inner slot out of range");
  return DerivIndex{inner.n, inner.order + 1, slot};
}

std::vector<Axis> index_to_axes(const DerivIndex& d) {
  std::vector<Axis> axes(static_cast<std::size_t>(d.order));
  auto rest = d.slot - 1;
  const auto base = static_cast<std::uint64_t>(d.n);
  for (int i = d.order - 1; i >= 0; --i) {
    axes[static_cast<std::size_t>(i)] = static_cast<Axis>(rest % base) + 1;
    rest /= base;
  }
  return axes;
}

DerivIndex axes_to_index(int n, std::span<const Axis> axes) {
  DerivIndex d = DerivIndex::identity(n);
  for (Axis a : axes) d = compose_index(a, d);
  return d;
}

MultiIndex index_to_multiindex(const DerivIndex& d) {
  MultiIndex mi{std::vector<int>(static_cast<std::size_t>(d.n), 0)};
  for (Axis a : index_to_axes(d)) ++mi.counts[static_cast<std::size_t>(a - 1)];
  return mi;
}

DerivIndex canonical_slot(const DerivIndex& d) {
  auto axes = index_to_axes(d);
  std::sort(axes.begin(), axes.end());
  return axes_to_index(d.n, axes);
}

std::vector<DerivIndex> indices_of_order(int n, int k) {
  const auto p = slot_count(n, k);
  std::vector<DerivIndex> out;
  out.reserve(static_cast<std::size_t>(p));
  for (std::uint64_t h = 1; h <= p; ++h) out.push_back(DerivIndex{n, k, h});
  return out;
}

}  // namespace difactor
