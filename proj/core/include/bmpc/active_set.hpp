#pragma once

#include <compare>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

namespace bmpc {

/// Selection mask sigma in {0,1}^m over constraint rows (or over the rows and
/// columns of a square matrix). Bit i set means row i is selected / active.
class ActiveSet {
 public:
  ActiveSet() = default;
  explicit ActiveSet(std::size_t size);

  static ActiveSet all(std::size_t size);
  /// Low bit of `mask` is row 0. Requires size <= 64.
  static ActiveSet from_mask(std::uint64_t mask, std::size_t size);
  /// Inverse of to_string(): character i is '0' or '1' for row i.
  static ActiveSet from_string(std::string_view bits);
  static ActiveSet from_indices(const std::vector<int>& rows, std::size_t size);

  std::size_t size() const noexcept { return size_; }
  std::size_t count() const noexcept;
  bool empty() const noexcept { return count() == 0; }

  bool test(std::size_t i) const;
  bool operator[](std::size_t i) const { return test(i); }
  void set(std::size_t i, bool value = true);
  void reset(std::size_t i) { set(i, false); }

  std::vector<int> indices() const;
  std::string to_string() const;

  bool operator==(const ActiveSet&) const = default;
  std::strong_ordering operator<=>(const ActiveSet& other) const;

  std::size_t hash() const noexcept;

 private:
  std::size_t size_ = 0;
  std::vector<std::uint64_t> words_;
};

struct ActiveSetHash {
  std::size_t operator()(const ActiveSet& s) const noexcept { return s.hash(); }
};

}  // namespace bmpc
