#include "poleplan/bitvec.hpp"

#include <algorithm>

#include "poleplan/error.hpp"

namespace poleplan {
namespace {

std::size_t words_for(std::size_t n) {
  return (n + BitVec::kWordBits - 1) / BitVec::kWordBits;
}

}  // namespace

BitVec::BitVec(std::size_t n, bool value)
    : size_(n), words_(words_for(n), value ? ~Word{0} : Word{0}) {
  if (value && n % kWordBits != 0) {
    words_.back() &= (Word{1} << (n % kWordBits)) - 1;
  }
}

BitVec BitVec::from_indices(std::size_t n, std::span<const std::size_t> idx) {
  BitVec v(n);
  for (std::size_t i : idx) {
    if (i >= n) throw InvalidArgument("bit index out of range");
    v.set(i);
  }
  return v;
}

BitVec BitVec::from_string(std::string_view bits) {
  BitVec v(bits.size());
  for (std::size_t i = 0; i < bits.size(); ++i) {
    if (bits[i] == '1') {
      v.set(i);
    } else if (bits[i] != '0') {
      throw InvalidArgument("bit string may only contain '0' and '1'");
    }
  }
  return v;
}

void BitVec::clear() noexcept { std::fill(words_.begin(), words_.end(), Word{0}); }

std::size_t BitVec::count() const noexcept {
  std::size_t c = 0;
  for (Word w : words_) c += static_cast<std::size_t>(std::popcount(w));
  return c;
}

bool BitVec::any() const noexcept {
  return std::any_of(words_.begin(), words_.end(), [](Word w) { return w != 0; });
}

std::vector<std::size_t> BitVec::indices() const {
  std::vector<std::size_t> out;
  for (std::size_t wi = 0; wi < words_.size(); ++wi) {
    Word w = words_[wi];
    while (w != 0) {
      out.push_back(wi * kWordBits + static_cast<std::size_t>(std::countr_zero(w)));
      w &= w - 1;
    }
  }
  return out;
}

std::string BitVec::to_string() const {
  std::string s(size_, '0');
  for (std::size_t i = 0; i < size_; ++i) {
    if (test(i)) s[i] = '1';
  }
  return s;
}

BitVec& BitVec::operator|=(const BitVec& other) noexcept {
  const std::size_t n = std::min(words_.size(), other.words_.size());
  for (std::size_t i = 0; i < n; ++i) words_[i] |= other.words_[i];
  return *this;
}

BitVec& BitVec::operator&=(const BitVec& other) noexcept {
  const std::size_t n = std::min(words_.size(), other.words_.size());
  for (std::size_t i = 0; i < n; ++i) words_[i] &= other.words_[i];
  for (std::size_t i = n; i < words_.size(); ++i) words_[i] = 0;
  return *this;
}

std::size_t hamming_distance(const BitVec& a, const BitVec& b) noexcept {
  auto wa = a.words();
  auto wb = b.words();
  const std::size_t n = std::min(wa.size(), wb.size());
  std::size_t d = 0;
  for (std::size_t i = 0; i < n; ++i) {
    d += static_cast<std::size_t>(std::popcount(wa[i] ^ wb[i]));
  }
  return d;
}

std::size_t and_count(const BitVec& a, const BitVec& b) noexcept {
  auto wa = a.words();
  auto wb = b.words();
  const std::size_t n = std::min(wa.size(), wb.size());
  std::size_t c = 0;
  for (std::size_t i = 0; i < n; ++i) {
    c += static_cast<std::size_t>(std::popcount(wa[i] & wb[i]));
  }
  return c;
}

bool lex_less(const BitVec& a, const BitVec& b) noexcept {
  if (a.size() != b.size()) return a.size() < b.size();
  auto wa = a.words();
  auto wb = b.words();
  for (std::size_t i = 0; i < wa.size(); ++i) {
    const BitVec::Word diff = wa[i] ^ wb[i];
    if (diff != 0) {
      // Lowest differing bit decides; whoever has the 0 there is smaller.
      const BitVec::Word low = diff & (~diff + 1);
      return (wa[i] & low) == 0;
    }
  }
  return false;
}

}  // namespace poleplan
