#include "bmpc/active_set.hpp"

#include <bit>

#include "bmpc/error.hpp"

namespace bmpc {

namespace {
constexpr std::size_t kWord = 64;
std::size_t word_count(std::size_t bits) { return (bits + kWord - 1) / kWord; }
}  // namespace

ActiveSet::ActiveSet(std::size_t size) : size_(size), words_(word_count(size), 0) {}

ActiveSet ActiveSet::all(std::size_t size) {
  ActiveSet s(size);
  for (std::size_t i = 0; i < size; ++i) s.set(i);
  return s;
}

ActiveSet ActiveSet::from_mask(std::uint64_t mask, std::size_t size) {
  require(size <= kWord, ErrorCode::kInvalidArgument, "ActiveSet::from_mask needs size <= 64");
  ActiveSet s(size);
  if (size > 0) {
    const std::uint64_t keep = size == kWord ? ~std::uint64_t{0} : ((std::uint64_t{1} << size) - 1);
    s.words_[0] = mask & keep;
  }
  return s;
}

ActiveSet ActiveSet::from_string(std::string_view bits) {
  ActiveSet s(bits.size());
  for (std::size_t i = 0; i < bits.size(); ++i) {
    if (bits[i] == '1') {
      s.set(i);
    } else if (bits[i] != '0') {
      fail(ErrorCode::kParse, "active-set string must contain only '0' and '1'");
    }
  }
  return s;
}

ActiveSet ActiveSet::from_indices(const std::vector<int>& rows, std::size_t size) {
  ActiveSet s(size);
  for (int r : rows) s.set(static_cast<std::size_t>(r));
  return s;
}

std::size_t ActiveSet::count() const noexcept {
  std::size_t n = 0;
  for (auto w : words_) n += static_cast<std::size_t>(std::popcount(w));
  return n;
}

bool ActiveSet::test(std::size_t i) const {
  require(i < size_, ErrorCode::kDimensionMismatch, "ActiveSet index out of range");
  return (words_[i / kWord] >> (i % kWord)) & 1U;
}

void ActiveSet::set(std::size_t i, bool value) {
  require(i < size_, ErrorCode::kDimensionMismatch, "ActiveSet index out of range");
  const std::uint64_t bit = std::uint64_t{1} << (i % kWord);
  if (value) {
    words_[i / kWord] |= bit;
  } else {
    words_[i / kWord] &= ~bit;
  }
}

std::vector<int> ActiveSet::indices() const {
  std::vector<int> out;
  out.reserve(count());
  for (std::size_t i = 0; i < size_; ++i) {
    if ((words_[i / kWord] >> (i % kWord)) & 1U) out.push_back(static_cast<int>(i));
  }
  return out;
}

std::string ActiveSet::to_string() const {
  std::string out(size_, '0');
  for (std::size_t i = 0; i < size_; ++i) {
    if ((words_[i / kWord] >> (i % kWord)) & 1U) out[i] = '1';
  }
  return out;
}

std::strong_ordering ActiveSet::operator<=>(const ActiveSet& other) const {
  if (auto c = size_ <=> other.size_; c != 0) return c;
  // Lexicographic on the string form: row 0 is the most significant.
  for (std::size_t i = 0; i < size_; ++i) {
    const bool a = test(i);
    const bool b = other.test(i);
    if (a != b) return a ? std::strong_ordering::greater : std::strong_ordering::less;
  }
  return std::strong_ordering::equal;
}

std::size_t ActiveSet::hash() const noexcept {
  std::size_t h = std::hash<std::size_t>{}(size_);
  for (auto w : words_) {
    h ^= std::hash<std::uint64_t>{}(w) + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
  }
  return h;
}

}  // namespace bmpc
