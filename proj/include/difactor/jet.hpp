#pragma once

// Slot-indexed derivative calculus.
//
// The k-th order partial derivatives of a function of n variables are laid out
// in n^k ordered slots. Slot h of order k corresponds to the axis sequence
// obtained from the base-n digits of h-1 (k digits, most significant first);
// the first axis of the sequence is applied first. Under this layout,
// differentiating slot (k,h) along axis i lands in slot (k+1, n(h-1)+i).

#include <compare>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace difactor {

using Axis = int;  // 1-based independent-variable index

struct DerivIndex {
  int n = 1;               // ambient number of independent variables
  int order = 0;           // k
  std::uint64_t slot = 1;  // h, 1 <= h <= n^k

  /// Validating constructor; throws InvalidIndex.
  static DerivIndex make(int n, int order, std::uint64_t slot);
  static DerivIndex identity(int n) { return DerivIndex{n, 0, 1}; }

  auto operator<=>(const DerivIndex&) const = default;
};

std::string to_string(const DerivIndex& d);

struct MultiIndex {
  std::vector<int> counts;  // length n

  int order() const;
  auto operator<=>(const MultiIndex&) const = default;
};

/// n^k; throws CapacityExceeded if it does not fit in 63 bits.
std::uint64_t slot_count(int n, int k);

/// m(1 + n + n^2 + ... + n^s).
std::uint64_t jet_size(int n, int m, int s);

/// D_{1,outer} D_{k,h} = D_{k+1, n(h-1)+outer}.
DerivIndex compose_index(Axis outer, const DerivIndex& inner);

std::vector<Axis> index_to_axes(const DerivIndex& d);
DerivIndex axes_to_index(int n, std::span<const Axis> axes);

MultiIndex index_to_multiindex(const DerivIndex& d);

/// Smallest slot of the same order whose multi-index equals that of d.
DerivIndex canonical_slot(const DerivIndex& d);

/// All valid indices of the given order, in slot order.
std::vector<DerivIndex> indices_of_order(int n, int k);

}  // namespace difactor
