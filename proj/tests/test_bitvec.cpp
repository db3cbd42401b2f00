#include "doctest.h"
#include "poleplan/bitvec.hpp"
#include "poleplan/error.hpp"
#include "poleplan/rng.hpp"

using poleplan::BitVec;

TEST_CASE("all-ones constructor keeps the tail clear") {
  BitVec v(70, true);
  CHECK(v.count() == 70);
  CHECK(v.word_count() == 2);
  CHECK(v.words()[1] == (BitVec::Word{1} << 6) - 1);
}

TEST_CASE("set, flip, indices and string form") {
  BitVec v(130);
  v.set(0);
  v.set(64);
  v.set(129);
  v.flip(5);
  v.flip(5);
  CHECK(v.indices() == std::vector<std::size_t>{0, 64, 129});
  CHECK(v.count() == 3);
  CHECK(BitVec::from_string(v.to_string()) == v);
  v.clear();
  CHECK(v.none());
}

TEST_CASE("from_indices rejects out of range") {
  const std::size_t idx[] = {3};
  CHECK_THROWS_AS(BitVec::from_indices(3, idx), poleplan::InvalidArgument);
  CHECK_THROWS_AS(BitVec::from_string("01x"), poleplan::InvalidArgument);
}

TEST_CASE("lexicographic order reads from index 0") {
  CHECK(poleplan::lex_less(BitVec::from_string("010"), BitVec::from_string("100")));
  CHECK_FALSE(poleplan::lex_less(BitVec::from_string("100"), BitVec::from_string("010")));
  CHECK_FALSE(poleplan::lex_less(BitVec::from_string("101"), BitVec::from_string("101")));
}

TEST_CASE("word ops agree with per-bit loops on random vectors") {
  poleplan::Rng rng(11);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 1 + rng.below(300);
    BitVec a(n), b(n);
    for (std::size_t i = 0; i < n; ++i) {
      a.set(i, rng.bernoulli(0.4));
      b.set(i, rng.bernoulli(0.4));
    }
    std::size_t ham = 0, both = 0, either = 0;
    bool less = false, decided = false;
    for (std::size_t i = 0; i < n; ++i) {
      ham += a.test(i) != b.test(i);
      both += a.test(i) && b.test(i);
      either += a.test(i) || b.test(i);
      if (!decided && a.test(i) != b.test(i)) {
        less = !a.test(i);
        decided = true;
      }
    }
    CHECK(poleplan::hamming_distance(a, b) == ham);
    CHECK(poleplan::and_count(a, b) == both);
    BitVec u = a;
    u |= b;
    CHECK(u.count() == either);
    BitVec x = a;
    x &= b;
    CHECK(x.count() == both);
    CHECK(poleplan::lex_less(a, b) == less);
  }
}

TEST_CASE("rng draws are reproducible and in range") {
  poleplan::Rng a(5), b(5);
  for (int i = 0; i < 1000; ++i) {
    const double u = a.uniform();
    CHECK(u == b.uniform());
    CHECK(u >= 0.0);
    CHECK(u < 1.0);
    CHECK(a.below(7) == b.below(7));
  }
  // Poisson mean check over many draws.
  poleplan::Rng r(9);
  double sum = 0;
  const int n = 20000;
  for (int i = 0; i < n; ++i) sum += static_cast<double>(r.poisson(1.5));
  CHECK(sum / n == doctest::Approx(1.5).epsilon(0.03));
  CHECK(r.poisson(0.0) == 0);
}
