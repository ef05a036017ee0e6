#pragma once

#include <bit>
#include <cassert>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace spear {

using StateId = std::int32_t;

// Fixed-width bitset over a dense index range [0, size).
class StateSet {
 public:
  using Word = std::uint64_t;
  static constexpr std::size_t kWordBits = 64;

  StateSet() = default;
  explicit StateSet(std::size_t size) : size_(size), words_((size + kWordBits - 1) / kWordBits) {}

  static StateSet from(std::size_t size, std::span<const StateId> members) {
    StateSet s(size);
    for (StateId m : members) s.insert(m);
    return s;
  }

  std::size_t size() const { return size_; }

  bool contains(StateId i) const {
    assert(i >= 0 && static_cast<std::size_t>(i) < size_);
    return (words_[static_cast<std::size_t>(i) / kWordBits] >> (static_cast<std::size_t>(i) % kWordBits)) & 1U;
  }

  void insert(StateId i) {
    assert(i >= 0 && static_cast<std::size_t>(i) < size_);
    words_[static_cast<std::size_t>(i) / kWordBits] |= Word{1} << (static_cast<std::size_t>(i) % kWordBits);
  }

  void erase(StateId i) {
    assert(i >= 0 && static_cast<std::size_t>(i) < size_);
    words_[static_cast<std::size_t>(i) / kWordBits] &= ~(Word{1} << (static_cast<std::size_t>(i) % kWordBits));
  }

  std::size_t count() const {
    std::size_t n = 0;
    for (Word w : words_) n += static_cast<std::size_t>(std::popcount(w));
    return n;
  }

  bool empty() const {
    for (Word w : words_)
      if (w != 0) return false;
    return true;
  }

  bool intersects(const StateSet& other) const {
    assert(size_ == other.size_);
    for (std::size_t i = 0; i < words_.size(); ++i)
      if (words_[i] & other.words_[i]) return true;
    return false;
  }

  // True when every member of *this is also in other.
  bool subset_of(const StateSet& other) const {
    assert(size_ == other.size_);
    for (std::size_t i = 0; i < words_.size(); ++i)
      if (words_[i] & ~other.words_[i]) return false;
    return true;
  }

  StateSet& operator|=(const StateSet& other) {
    assert(size_ == other.size_);
    for (std::size_t i = 0; i < words_.size(); ++i) words_[i] |= other.words_[i];
    return *this;
  }

  StateSet& operator&=(const StateSet& other) {
    assert(size_ == other.size_);
    for (std::size_t i = 0; i < words_.size(); ++i) words_[i] &= other.words_[i];
    return *this;
  }

  // Removes every member of other.
  StateSet& subtract(const StateSet& other) {
    assert(size_ == other.size_);
    for (std::size_t i = 0; i < words_.size(); ++i) words_[i] &= ~other.words_[i];
    return *this;
  }

  friend StateSet operator|(StateSet a, const StateSet& b) { return a |= b; }
  friend StateSet operator&(StateSet a, const StateSet& b) { return a &= b; }
  friend bool operator==(const StateSet&, const StateSet&) = default;

  template <typename F>
  void for_each(F&& f) const {
    for (std::size_t w = 0; w < words_.size(); ++w) {
      Word bits = words_[w];
      while (bits) {
        const int b = std::countr_zero(bits);
        f(static_cast<StateId>(w * kWordBits + static_cast<std::size_t>(b)));
        bits &= bits - 1;
      }
    }
  }

  std::vector<StateId> members() const {
    std::vector<StateId> out;
    out.reserve(count());
    for_each([&](StateId s) { out.push_back(s); });
    return out;
  }

  std::span<const Word> words() const { return words_; }

 private:
  std::size_t size_ = 0;
  std::vector<Word> words_;
};

// Dense row-major binary matrix; each row is a bitset over the columns.
class BitMatrix {
 public:
  BitMatrix() = default;
  BitMatrix(std::size_t rows, std::size_t cols)
      : rows_(rows), cols_(cols), stride_((cols + 63) / 64), words_(rows * stride_) {}

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }

  bool get(std::size_t r, std::size_t c) const {
    assert(r < rows_ && c < cols_);
    return (words_[r * stride_ + c / 64] >> (c % 64)) & 1U;
  }

  void set(std::size_t r, std::size_t c, bool value = true) {
    assert(r < rows_ && c < cols_);
    auto& w = words_[r * stride_ + c / 64];
    const std::uint64_t bit = std::uint64_t{1} << (c % 64);
    w = value ? (w | bit) : (w & ~bit);
  }

  std::size_t row_count(std::size_t r) const {
    std::size_t n = 0;
    for (std::size_t i = 0; i < stride_; ++i) n += static_cast<std::size_t>(std::popcount(words_[r * stride_ + i]));
    return n;
  }

  friend bool operator==(const BitMatrix&, const BitMatrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::size_t stride_ = 0;
  std::vector<std::uint64_t> words_;
};

}  // namespace spear
