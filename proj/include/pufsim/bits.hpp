#pragma once

#include <bit>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "pufsim/error.hpp"

namespace pufsim {

using Word = std::uint64_t;
inline constexpr std::size_t kWordBits = 64;

constexpr std::size_t words_for(std::size_t bits) noexcept { return (bits + kWordBits - 1) / kWordBits; }

inline bool get_bit(std::span<const Word> words, std::size_t i) noexcept {
  return (words[i / kWordBits] >> (i % kWordBits)) & 1u;
}

inline void set_bit(std::span<Word> words, std::size_t i, bool value) noexcept {
  const Word m = Word{1} << (i % kWordBits);
  if (value) {
    words[i / kWordBits] |= m;
  } else {
    words[i / kWordBits] &= ~m;
  }
}

inline std::size_t popcount(std::span<const Word> a) noexcept {
  std::size_t n = 0;
  for (Word w : a) n += static_cast<std::size_t>(std::popcount(w));
  return n;
}

/// popcount(a ^ b); padding bits past the logical length must be zero.
inline std::size_t hamming(std::span<const Word> a, std::span<const Word> b) noexcept {
  std::size_t n = 0;
  for (std::size_t i = 0; i < a.size(); ++i) n += static_cast<std::size_t>(std::popcount(a[i] ^ b[i]));
  return n;
}

/// popcount((a ^ b) & m)
inline std::size_t hamming_masked(std::span<const Word> a, std::span<const Word> b,
                                  std::span<const Word> m) noexcept {
  std::size_t n = 0;
  for (std::size_t i = 0; i < a.size(); ++i) n += static_cast<std::size_t>(std::popcount((a[i] ^ b[i]) & m[i]));
  return n;
}

/// A length-n packed bit vector. Padding bits are kept at zero.
class BitVector {
 public:
  BitVector() = default;
  explicit BitVector(std::size_t n, bool value = false) : n_(n), words_(words_for(n), value ? ~Word{0} : Word{0}) {
    clear_padding();
  }

  [[nodiscard]] std::size_t size() const noexcept { return n_; }
  [[nodiscard]] bool operator[](std::size_t i) const noexcept { return get_bit(words_, i); }
  void set(std::size_t i, bool value) noexcept { set_bit(words_, i, value); }
  [[nodiscard]] std::size_t count() const noexcept { return popcount(words_); }
  [[nodiscard]] std::span<const Word> words() const noexcept { return words_; }
  [[nodiscard]] std::span<Word> words() noexcept { return words_; }

  friend bool operator==(const BitVector&, const BitVector&) = default;

 private:
  void clear_padding() noexcept {
    if (n_ % kWordBits != 0 && !words_.empty()) words_.back() &= (Word{1} << (n_ % kWordBits)) - 1;
  }

  std::size_t n_ = 0;
  std::vector<Word> words_;
};

/// rows x cols bits, each row padded to whole words.
class BitMatrix {
 public:
  BitMatrix() = default;
  BitMatrix(std::size_t rows, std::size_t cols)
      : rows_(rows), cols_(cols), stride_(words_for(cols)), words_(rows * stride_, 0) {}

  [[nodiscard]] std::size_t rows() const noexcept { return rows_; }
  [[nodiscard]] std::size_t cols() const noexcept { return cols_; }
  [[nodiscard]] std::size_t stride() const noexcept { return stride_; }

  [[nodiscard]] std::span<const Word> row(std::size_t r) const noexcept {
    return std::span<const Word>(words_).subspan(r * stride_, stride_);
  }
  [[nodiscard]] std::span<Word> row(std::size_t r) noexcept { return std::span<Word>(words_).subspan(r * stride_, stride_); }

  [[nodiscard]] bool get(std::size_t r, std::size_t c) const noexcept { return get_bit(row(r), c); }
  void set(std::size_t r, std::size_t c, bool v) noexcept { set_bit(row(r), c, v); }

  [[nodiscard]] std::span<const Word> data() const noexcept { return words_; }
  [[nodiscard]] std::span<Word> data() noexcept { return words_; }

  friend bool operator==(const BitMatrix&, const BitMatrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::size_t stride_ = 0;
  std::vector<Word> words_;
};

}  // namespace pufsim
