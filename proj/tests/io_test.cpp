#include <gtest/gtest.h>

#include <filesystem>

#include "oracles.hpp"
#include "qmenv/envelopment.hpp"
#include "qmenv/errors.hpp"
#include "qmenv/io.hpp"
#include "qmenv/protocols.hpp"

using namespace qmenv;

namespace {

std::filesystem::path temp_path(const std::string& name) {
    return std::filesystem::temp_directory_path() / ("qmenv_io_" + name);
}

} // namespace

TEST(Sha256, KnownVector) {
    EXPECT_EQ(sha256_hex("abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
    EXPECT_EQ(sha256_hex(""), "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
}

TEST(ModelJson, RoundTripBitExact) {
    oracle::Random rng(51);
    for (int t = 0; t < 20; ++t) {
        auto m = oracle::random_model(rng);
        auto back = model_from_json(parse_json(model_to_json(m).dump(), "m"));
        EXPECT_EQ(back, m);
        EXPECT_EQ(probability_table(back), probability_table(m));
        EXPECT_EQ(model_id(back), model_id(m));
    }
}

TEST(ModelJson, ProductStructurePreserved) {
    auto env = envelop_with_leakage(b92_model(0.3, AttackSpec::intercept()), 0.4);
    auto path = temp_path("beta.json");
    save_model(env.beta, path, json{{"tool", "test"}});
    auto back = load_model(path);
    EXPECT_EQ(back, env.beta);
    EXPECT_EQ(back.eve_only(), env.beta.eve_only());
    EXPECT_EQ(back.protocol(), "b92");
    EXPECT_EQ(probability_table(back), probability_table(env.beta));
    // provenance does not change the content hash
    EXPECT_EQ(model_id(back), model_id(env.beta));
    std::filesystem::remove(path);
}

TEST(ModelJson, IdentityFactorSyntax) {
    auto text = R"({
      "format": "qmenv-model/1",
      "dim": 2,
      "commands": {"alice": ["a"], "bob": ["b"], "eve": ["e"]},
      "states": {"a": [[[1, 0], [0, 0]]]},
      "povms": [{"bob": "b", "eve": "e", "elements": {"all": [{"identity": 2}]}}]
    })";
    auto m = model_from_json(parse_json(text, "inline"));
    EXPECT_TRUE(validate_model(m).ok());
    EXPECT_EQ(born_probability(m, {"a", "b", "e"}, "all"), 1.0);
}

TEST(ModelJson, Errors) {
    EXPECT_THROW(parse_json("{", "x"), ParseError);
    EXPECT_THROW(model_from_json(parse_json(R"({"format": "other"})", "x")), ParseError);
    auto missing_povm = R"({
      "format": "qmenv-model/1",
      "commands": {"alice": ["a"], "bob": ["b"], "eve": ["e"]},
      "states": {"a": [[[1, 0], [0, 0]]]},
      "povms": []
    })";
    EXPECT_THROW(model_from_json(parse_json(missing_povm, "x")), ParseError);
    auto bad_complex = R"({
      "format": "qmenv-model/1",
      "commands": {"alice": ["a"], "bob": ["b"], "eve": ["e"]},
      "states": {"a": [[[1], [0, 0]]]},
      "povms": [{"bob": "b", "eve": "e", "elements": {"all": [{"identity": 2}]}}]
    })";
    EXPECT_THROW(model_from_json(parse_json(bad_complex, "x")), ParseError);
    auto wrong_dim = R"({
      "format": "qmenv-model/1", "dim": 3,
      "commands": {"alice": ["a"], "bob": ["b"], "eve": ["e"]},
      "states": {"a": [[[1, 0], [0, 0]]]},
      "povms": [{"bob": "b", "eve": "e", "elements": {"all": [{"identity": 2}]}}]
    })";
    EXPECT_THROW(model_from_json(parse_json(wrong_dim, "x")), ParseError);
    EXPECT_THROW(load_model(temp_path("missing.json")), IoError);
}

TEST(MapJson, RoundTrip) {
    auto alpha = bb84_model(AttackSpec::intercept());
    auto env = envelop_with_leakage(alpha, 0.25);
    auto path = temp_path("map.json");
    save_map(env.map, path);
    auto back = load_map(path);
    EXPECT_EQ(back, env.map);
    EXPECT_TRUE(check_envelopment(alpha, env.beta, back, 1e-10).holds);
    std::filesystem::remove(path);

    std::map<Observation, Observation> plain{{{{"a", "b", "e"}, "x"}, {{"a", "b", "e"}, "y"}}};
    EnvelopmentMap unfactored(plain);
    EXPECT_EQ(map_from_json(map_to_json(unfactored)), unfactored);
}

TEST(MapJson, InconsistentFactorsRejected) {
    auto doc = map_to_json(EnvelopmentMap::identity(bb84_model(AttackSpec::none())));
    doc["factored"]["h"][0][1] = "elsewhere";
    EXPECT_THROW(map_from_json(doc), ParseError);
}
