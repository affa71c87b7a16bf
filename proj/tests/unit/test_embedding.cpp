#include <gtest/gtest.h>

#include <random>

#include <cmath>

#include "careermatch/embedding.hpp"
#include "careermatch/error.hpp"
#include "careermatch/text.hpp"
#include "fake_remote.hpp"

using namespace careermatch;
using namespace careermatch::embedding;
using careermatch::testing::Fault;
using careermatch::testing::FakeRemote;

TEST(Vector, RejectsEmptyAndNonFinite) {
  EXPECT_THROW(Vector(std::vector<double>{}), ValidationError);
  EXPECT_THROW(Vector({1.0, NAN}), ValidationError);
  EXPECT_THROW(Vector({INFINITY}), ValidationError);
}

TEST(L2Normalize, ThreeFourFive) {
  auto v = l2_normalize(Vector({3, 4}));
  EXPECT_DOUBLE_EQ(v[0], 0.6);
  EXPECT_DOUBLE_EQ(v[1], 0.8);
}

TEST(L2Normalize, UnitVectorIsFixedPoint) {
  auto u = l2_normalize(Vector({1, 2, 3}));
  auto uu = l2_normalize(u);
  for (std::size_t i = 0; i < 3; ++i) EXPECT_NEAR(u[i], uu[i], 1e-12);
}

TEST(L2Normalize, ZeroVectorRejected) { EXPECT_THROW(l2_normalize(Vector({0, 0})), ValidationError); }

TEST(Cosine, SelfOrthogonalOpposite) {
  Vector a({1, 2, 3});
  EXPECT_EQ(cosine(a, a), 1.0);
  EXPECT_EQ(cosine(Vector({1, 0}), Vector({0, 1})), 0.0);
  EXPECT_EQ(cosine(a, Vector({-1, -2, -3})), -1.0);
}

TEST(Cosine, ClampedIntoRange) {
  // many-component vectors where rounding pushes the raw ratio past 1
  std::vector<double> x(257);
  for (std::size_t i = 0; i < x.size(); ++i) x[i] = 0.1 + 1e-3 * i;
  Vector v(x);
  const double c = cosine(v, v);
  EXPECT_LE(c, 1.0);
  EXPECT_GE(c, -1.0);
}

TEST(Cosine, Errors) {
  EXPECT_THROW(cosine(Vector({1, 0}), Vector({1, 0, 0})), ValidationError);
  EXPECT_THROW(cosine(Vector({0, 0}), Vector({1, 0})), ValidationError);
}

TEST(HashEmbed, Deterministic) {
  auto a = hash_embed("Registered nurse with ICU experience");
  auto b = hash_embed("Registered nurse with ICU experience");
  EXPECT_EQ(a, b);
  EXPECT_EQ(a.dim(), 256u);
}

TEST(HashEmbed, BagOfTokens) { EXPECT_EQ(hash_embed("alpha beta"), hash_embed("beta alpha")); }

TEST(HashEmbed, SingleTokenIsOneSignedBucket) {
  auto v = hash_embed("nurse", 64, 3);
  int nonzero = 0;
  for (double x : v.values()) {
    if (x != 0.0) {
      ++nonzero;
      EXPECT_EQ(std::abs(x), 1.0);
    }
  }
  EXPECT_EQ(nonzero, 1);
}

TEST(HashEmbed, MatchesReferenceConstruction) {
  // seed as 8 little-endian bytes, then the token
  const std::uint64_t seed = 0x0102030405060708ULL;
  const char bytes[8] = {8, 7, 6, 5, 4, 3, 2, 1};
  const auto h = fnv1a64(std::string(bytes, 8) + "pflege");
  auto v = hash_embed("Pflege", 100, seed);
  const double expected = (h >> 63) ? -1.0 : 1.0;
  EXPECT_EQ(v[h % 100], expected);
}

TEST(HashEmbed, SeedChangesVector) { EXPECT_NE(hash_embed("a b c", 256, 0), hash_embed("a b c", 256, 1)); }

TEST(HashEmbed, Errors) {
  EXPECT_THROW(hash_embed("  ,, "), ValidationError);
  EXPECT_THROW(hash_embed("x", 0), ValidationError);
  // find two tokens that share a bucket with opposite signs in dim 1
  std::string pos, neg;
  // short suffix changes barely reach bit 63, so draw whole random words
  std::mt19937 rng(3);
  for (int i = 0; i < 2000 && (pos.empty() || neg.empty()); ++i) {
    std::string t;
    for (int j = 0; j < 6; ++j) t += static_cast<char>('a' + rng() % 26);
    const double s = hash_embed(t, 1)[0];
    (s > 0 ? pos : neg) = t;
  }
  ASSERT_FALSE(pos.empty());
  ASSERT_FALSE(neg.empty());
  EXPECT_THROW(hash_embed(pos + " " + neg, 1), ValidationError);
}

TEST(HashEmbedder, InfoLabel) {
  HashEmbedder e(128, 9);
  EXPECT_EQ(e.info().dim, 128u);
  EXPECT_EQ(e.info().model, "builtin-hash-128-seed9");
  std::vector<std::string> texts = {"a", "b c"};
  auto vs = e.embed(texts);
  ASSERT_EQ(vs.size(), 2u);
  EXPECT_EQ(vs[1], hash_embed("b c", 128, 9));
}

TEST(EmbeddingStore, RoundTrip) {
  EmbeddingStore s;
  s.add("x", Vector({0.1, -0.0}));
  s.add("y", Vector({1.0 / 3.0, 2e-300}));
  const auto text = write_embeddings(s);
  auto back = read_embeddings(text);
  EXPECT_EQ(back, s);
  EXPECT_TRUE(std::signbit(back.find("x")->values()[1]));
  EXPECT_EQ(write_embeddings(back), text);
}

TEST(EmbeddingStore, DuplicateIdNamed) {
  try {
    read_embeddings("{\"id\":\"dup\",\"vector\":[1,2]}\n{\"id\":\"dup\",\"vector\":[1,2]}\n");
    FAIL();
  } catch (const ValidationError& e) {
    EXPECT_NE(std::string(e.what()).find("dup"), std::string::npos);
  }
}

TEST(EmbeddingStore, DimMismatch) {
  EXPECT_THROW(read_embeddings("{\"id\":\"a\",\"vector\":[1,2]}\n{\"id\":\"b\",\"vector\":[1,2,3]}\n"),
               ValidationError);
}

TEST(EmbeddingStore, MalformedLines) {
  EXPECT_THROW(read_embeddings("{\"id\":\"a\"}\n"), ValidationError);
  EXPECT_THROW(read_embeddings("{\"id\":\"a\",\"vector\":[\"x\"]}\n"), ValidationError);
  EXPECT_THROW(read_embeddings("not json\n"), ValidationError);
}

TEST(DecodeEmbedResponse, Contract) {
  ProviderInfo info;
  auto vs = decode_embed_response(R"({"model":"m","dim":2,"vectors":[[1,0],[0,1],[1,1]]})", 3, &info);
  EXPECT_EQ(vs.size(), 3u);
  EXPECT_EQ(info.model, "m");
  EXPECT_EQ(info.dim, 2u);
  EXPECT_THROW(decode_embed_response(R"({"model":"m","dim":2,"vectors":[[1,0],[0,1]]})", 3, nullptr), ProtocolError);
  EXPECT_THROW(decode_embed_response(R"({"model":"m","dim":2,"vectors":[[1,0],[0,1,2]]})", 2, nullptr), ProtocolError);
  EXPECT_THROW(decode_embed_response("[]", 0, nullptr), ProtocolError);
}

TEST(RemoteEmbedder, ThreeTextsThreeVectors) {
  FakeRemote remote(16);
  RemoteEmbedder e(remote.endpoint(), 2);
  std::vector<std::string> texts = {"one", "two words", "three little words"};
  auto vs = e.embed(texts);
  ASSERT_EQ(vs.size(), 3u);
  for (const auto& v : vs) EXPECT_EQ(v.dim(), 16u);
  EXPECT_EQ(vs[2], hash_embed("three little words", 16, 42));
  EXPECT_LE(remote.max_batch(), 2u);
  EXPECT_EQ(e.info().model, "fake-encoder");
  EXPECT_EQ(e.info().dim, 16u);
}

TEST(RemoteEmbedder, CountMismatchSurfaced) {
  FakeRemote remote(8);
  remote.set_fault(Fault::kCountMismatch);
  RemoteEmbedder e(remote.endpoint());
  std::vector<std::string> texts = {"a", "b", "c"};
  try {
    e.embed(texts);
    FAIL();
  } catch (const ProtocolError& err) {
    EXPECT_NE(std::string(err.what()).find("count mismatch"), std::string::npos) << err.what();
    EXPECT_NE(std::string(err.what()).find("/embed"), std::string::npos) << err.what();
  }
}

TEST(RemoteEmbedder, MixedDimsSurfaced) {
  FakeRemote remote(8);
  remote.set_fault(Fault::kMixedDims);
  RemoteEmbedder e(remote.endpoint());
  std::vector<std::string> texts = {"a", "b", "c"};
  EXPECT_THROW(e.embed(texts), ProtocolError);
}

TEST(RemoteEmbedder, TransportAndGarbage) {
  FakeRemote remote(8);
  remote.set_fault(Fault::kHttp500);
  EXPECT_THROW(RemoteEmbedder(remote.endpoint()).embed_one("x"), ProtocolError);
  remote.set_fault(Fault::kGarbage);
  EXPECT_THROW(RemoteEmbedder(remote.endpoint()).embed_one("x"), ProtocolError);
  EXPECT_THROW(RemoteEmbedder("http://127.0.0.1:1", 4, 1.0).embed_one("x"), ProtocolError);
}

TEST(MakeProvider, Specs) {
  EXPECT_EQ(make_provider("builtin-hash", 32, 1)->info().dim, 32u);
  EXPECT_THROW(make_provider("ftp://x"), ValidationError);
}
