#include <map>
#include <set>

#include "doctest.h"
#include "support.hpp"

using namespace ansrec;
using namespace ansrec::testing;

namespace {

InteractionSet one_user(std::size_t n_items, std::vector<ItemId> observed) {
  InteractionSet s;
  s.n_users = 1;
  s.n_items = n_items;
  std::sort(observed.begin(), observed.end());
  s.user_items = {observed};
  for (ItemId i : observed) s.interactions.push_back({0, i, 0});
  return s;
}

ParamStore scored_items(std::vector<double> item_scores) {
  // d = 1, user embedding 1, so each item's score is its embedding.
  ParamStore p = ParamStore::zeros(1, static_cast<Eigen::Index>(item_scores.size()), 1);
  p.user_emb(0, 0) = 1.0;
  for (std::size_t i = 0; i < item_scores.size(); ++i) p.item_emb(static_cast<Eigen::Index>(i), 0) = item_scores[i];
  return p;
}

}  // namespace

TEST_CASE("sampler names") {
  for (auto k : {SamplerKind::rns, SamplerKind::dns, SamplerKind::ans, SamplerKind::hns})
    CHECK(parse_sampler_kind(to_string(k)) == k);
  CHECK_THROWS(parse_sampler_kind("mcmc"));
}

TEST_CASE("draw_candidates exhausts a small pool") {
  const InteractionSet s = one_user(5, {0, 1});
  Rng rng = derive_rng(1, "t");
  CandidateSet cs = draw_candidates(0, 0, s, 3, rng);
  std::sort(cs.items.begin(), cs.items.end());
  CHECK(cs.items == std::vector<ItemId>{2, 3, 4});
  CHECK_THROWS(draw_candidates(0, 0, s, 4, rng));
  CHECK_THROWS(draw_candidates(0, 0, s, 0, rng));
}

TEST_CASE("draw_candidates is uniform") {
  // pool {7, 9}
  std::vector<ItemId> observed;
  for (ItemId i = 0; i < 10; ++i)
    if (i != 7 && i != 9) observed.push_back(i);
  const InteractionSet s = one_user(10, observed);
  int sevens = 0;
  const int n = 10000;
  for (int seed = 0; seed < n; ++seed) {
    Rng rng = derive_rng(static_cast<std::uint64_t>(seed), "t");
    const CandidateSet cs = draw_candidates(0, 0, s, 1, rng);
    REQUIRE(cs.size() == 1);
    REQUIRE((cs.items[0] == 7 || cs.items[0] == 9));
    sevens += cs.items[0] == 7;
  }
  CHECK(std::abs(sevens / double(n) - 0.5) <= 0.03);
}

TEST_CASE("draw_candidates never returns observed items and draws distinct ones") {
  Rng rng = derive_rng(2, "t");
  for (int trial = 0; trial < 300; ++trial) {
    const InteractionSet s = random_interactions(3, 12, 1 + trial % 8, rng);
    for (UserId u = 0; u < 3; ++u) {
      const std::size_t pool = s.n_items - s.user_items[u].size();
      for (std::size_t m = 1; m <= pool; ++m) {
        const CandidateSet cs = draw_candidates(u, 0, s, m, rng);
        REQUIRE(cs.size() == m);
        std::set<ItemId> uniq(cs.items.begin(), cs.items.end());
        CHECK(uniq.size() == m);
        for (ItemId i : cs.items) CHECK_FALSE(s.contains(u, i));
      }
    }
  }
}

TEST_CASE("rns_select") {
  Rng rng = derive_rng(3, "t");
  const SamplerOutput one = rns_select({0, 0, {42}}, rng);
  CHECK(one.final_item == 42);
  CHECK(one.provenance == SamplerKind::rns);
  CHECK(one.aux_contrastive == 0.0);
  CHECK(one.aux_disentangle == 0.0);
  CHECK_FALSE(one.synthetic());
  CHECK_THROWS(rns_select({0, 0, {}}, rng));

  std::map<ItemId, int> freq;
  for (int seed = 0; seed < 10000; ++seed) {
    Rng r = derive_rng(static_cast<std::uint64_t>(seed), "t");
    ++freq[rns_select({0, 0, {7, 9}}, r).final_item];
  }
  CHECK(std::abs(freq[7] / 10000.0 - 0.5) <= 0.03);
}

TEST_CASE("dns_select examples") {
  const ParamStore p = scored_items({0.1, 0.9, 0.4});
  const Vector u = p.user_emb.row(0).transpose();
  const SamplerOutput o = dns_select(u, {0, 0, {0, 1, 2}}, p);
  CHECK(o.final_item == 1);
  CHECK(o.provenance == SamplerKind::dns);
  CHECK(o.aux_contrastive == 0.0);

  const ParamStore flat = scored_items({0.5, 0.5, 0.5, 0.5});
  CHECK(dns_select(u, {0, 0, {3, 1, 2}}, flat).final_item == 1);
  CHECK_THROWS(dns_select(u, {0, 0, {}}, flat));
}

TEST_CASE("dns_select equals a linear scan") {
  for (std::uint64_t seed = 0; seed < 300; ++seed) {
    Rng rng = derive_rng(seed, "t");
    ParamStore p = init_params(3, 15, 3, seed);
    if (seed % 3 == 0) p.item_emb = p.item_emb.array().round();  // force ties
    std::vector<ItemId> items{0, 1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12, 13, 14};
    std::shuffle(items.begin(), items.end(), rng);
    items.resize(1 + seed % 15);
    const Vector u = p.user_emb.row(0).transpose();
    ItemId best = -1;
    double best_score = -1e300;
    for (ItemId i : items) {
      double s = 0;
      for (int k = 0; k < 3; ++k) s += u(k) * p.item_emb(i, k);
      if (s > best_score || (s == best_score && i < best)) best = i, best_score = s;
    }
    CHECK(dns_select(u, {0, 0, items}, p).final_item == best);
  }
}

TEST_CASE("samplers are reproducible under a fixed stream") {
  const ParamStore p = init_params(4, 20, 3, 1);
  Rng rng = derive_rng(4, "t");
  const InteractionSet s = random_interactions(4, 20, 4, rng);
  for (auto kind : {SamplerKind::rns, SamplerKind::dns, SamplerKind::ans, SamplerKind::hns}) {
    auto run = [&]() {
      Rng r = derive_rng(77, "t");
      const CandidateSet cs = draw_candidates(1, 0, s, 5, r);
      const Vector u = p.user_emb.row(1).transpose();
      switch (kind) {
        case SamplerKind::rns: return rns_select(cs, r);
        case SamplerKind::dns: return dns_select(u, cs, p);
        case SamplerKind::hns: return hns_select(cs, p, r);
        default: return ans_sample(cs, p, {}, r).output;
      }
    };
    const SamplerOutput a = run(), b = run();
    CHECK(a.final_item == b.final_item);
    CHECK(a.candidates == b.candidates);
    CHECK(a.final_vec == b.final_vec);
    CHECK(a.aux_contrastive == b.aux_contrastive);
  }
}
