#pragma once

#include <bit>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace poleplan {

// Fixed-length packed bit vector. Bits past size() in the last word are
// always zero, so word-level popcount never over-counts.
class BitVec {
 public:
  using Word = std::uint64_t;
  static constexpr std::size_t kWordBits = 64;

  BitVec() = default;
  explicit BitVec(std::size_t n, bool value = false);

  static BitVec from_indices(std::size_t n, std::span<const std::size_t> idx);
  // '0'/'1' characters, index 0 first.
  static BitVec from_string(std::string_view bits);

  std::size_t size() const noexcept { return size_; }
  std::size_t word_count() const noexcept { return words_.size(); }
  bool empty() const noexcept { return size_ == 0; }

  bool test(std::size_t i) const noexcept {
    return (words_[i / kWordBits] >> (i % kWordBits)) & 1U;
  }
  void set(std::size_t i, bool value = true) noexcept {
    Word mask = Word{1} << (i % kWordBits);
    if (value) {
      words_[i / kWordBits] |= mask;
    } else {
      words_[i / kWordBits] &= ~mask;
    }
  }
  void flip(std::size_t i) noexcept {
    words_[i / kWordBits] ^= Word{1} << (i % kWordBits);
  }
  void clear() noexcept;

  std::size_t count() const noexcept;
  bool any() const noexcept;
  bool none() const noexcept { return !any(); }

  std::vector<std::size_t> indices() const;
  std::string to_string() const;

  std::span<const Word> words() const noexcept { return words_; }
  std::span<Word> words() noexcept { return words_; }

  BitVec& operator|=(const BitVec& other) noexcept;
  BitVec& operator&=(const BitVec& other) noexcept;

  friend bool operator==(const BitVec&, const BitVec&) = default;

 private:
  std::size_t size_ = 0;
  std::vector<Word> words_;
};

std::size_t hamming_distance(const BitVec& a, const BitVec& b) noexcept;

// popcount(a & b) without materialising the intersection.
std::size_t and_count(const BitVec& a, const BitVec& b) noexcept;

// Lexicographic order over the bit sequence read from index 0 upwards,
// with 0 < 1. Vectors of different length compare by length first.
bool lex_less(const BitVec& a, const BitVec& b) noexcept;

}  // namespace poleplan
