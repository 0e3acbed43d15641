#include <gtest/gtest.h>

#include "halfstrip/error.hpp"
#include "halfstrip/json_io.hpp"

using namespace halfstrip;

namespace {

ErrorKind kind_of(const std::string& text) {
    try {
        parse_spec_text(text);
    } catch (const Error& e) {
        return e.kind();
    }
    ADD_FAILURE() << "no error for " << text;
    return ErrorKind::InvalidArgument;
}

}  // namespace

TEST(SpecJson, CrwParses) {
    const LoadedSpec s = parse_spec_text(R"({"type":"crw","q":0.6,"c_plus":0.2,"c_minus":0.2,"delta":1,"amp":0})");
    ASSERT_TRUE(s.model);
    ASSERT_TRUE(s.crw);
    EXPECT_EQ(s.crw->q, 0.6);
    EXPECT_EQ(s.model->labels().size(), 2u);
}

TEST(SpecJson, UnknownKeysRejected) {
    EXPECT_EQ(kind_of(R"({"type":"crw","q":0.6,"c_plus":0.2,"c_minus":0.2,"colour":1})"), ErrorKind::Schema);
    EXPECT_EQ(kind_of(R"({"type":"tabular","labels":["a"],"lines":{"a":[{"from":0,"atoms":[{"jump":1,"to":"a","p":1,"q":0}]}]}})"),
              ErrorKind::Schema);
    EXPECT_EQ(kind_of(R"({"type":"nope"})"), ErrorKind::Schema);
    EXPECT_EQ(kind_of(R"({"q":0.6})"), ErrorKind::Schema);
    EXPECT_EQ(kind_of("{bad json"), ErrorKind::Schema);
    EXPECT_EQ(kind_of(R"({"type":"crw","q":"x","c_plus":0,"c_minus":0})"), ErrorKind::Schema);
}

TEST(SpecJson, TabularModelErrors) {
    EXPECT_EQ(kind_of(R"({"type":"tabular","labels":["a"],"lines":{"a":[{"from":0,"atoms":[{"jump":1,"to":"b","p":1}]}]}})"),
              ErrorKind::InvalidModel);
    EXPECT_EQ(kind_of(R"({"type":"tabular","labels":["a"],"lines":{"b":[]}})"), ErrorKind::Schema);
}

TEST(SpecJson, CoefficientsRoundTrip) {
    const std::string text = R"({"type":"coefficients","labels":["+1","-1"],
        "Q":[[0.6,0.4],[0.4,0.6]],"d":[0.2,-0.2],"e":[0.2,0.2],"t2":[1,1],
        "d_cross":[[0.6,-0.4],[0.4,-0.6]],"gamma":[[0.1,-0.1],[0.1,-0.1]],"p":"inf"})";
    const LoadedSpec s = parse_spec_text(text);
    ASSERT_TRUE(s.coeffs);
    EXPECT_TRUE(std::isinf(s.coeffs->moment_order));
    const Json again = to_json(*s.coeffs);
    EXPECT_EQ(again["p"], "inf");
    const AsymptoticCoefficients back = coefficients_from_json(again);
    EXPECT_EQ((back.gamma - s.coeffs->gamma).cwiseAbs().maxCoeff(), 0.0);
    EXPECT_EQ((back.pi - s.coeffs->pi).cwiseAbs().maxCoeff(), 0.0);
}

TEST(SpecJson, CoefficientShapeAndIdentityErrors) {
    EXPECT_EQ(kind_of(R"({"type":"coefficients","labels":["a"],"Q":[[1]],"d":[0,1],"e":[0],"t2":[1],"d_cross":[[0]],"gamma":[[0]]})"),
              ErrorKind::Schema);
    EXPECT_EQ(kind_of(R"({"type":"coefficients","labels":["a"],"Q":[[1]],"d":[0],"e":[0],"t2":[1],"d_cross":[[0.5]],"gamma":[[0]]})"),
              ErrorKind::InvalidCoefficients);
    EXPECT_EQ(kind_of(R"({"type":"coefficients","labels":["a"],"Q":[[1]],"d":[0],"e":[0],"t2":[1],"d_cross":[[0]],"gamma":[[0]],"pi":[0.5]})"),
              ErrorKind::InvalidCoefficients);
}

TEST(SpecJson, HashIsStable) {
    const std::string text = R"({"type":"crw","q":0.6,"c_plus":0.2,"c_minus":0.2})";
    EXPECT_EQ(parse_spec_text(text).hash, parse_spec_text(text).hash);
    EXPECT_NE(parse_spec_text(text).hash,
              parse_spec_text(R"({"type":"crw","q":0.6,"c_plus":0.2,"c_minus":0.3})").hash);
    EXPECT_EQ(fnv1a64(""), 0xcbf29ce484222325ULL);
    EXPECT_EQ(fnv1a64("a"), 0xaf63dc4c8601ec8cULL);
}

TEST(ReportJson, InfinityAsString) {
    EXPECT_EQ(number(INFINITY), "inf");
    EXPECT_EQ(number(-INFINITY), "-inf");
    EXPECT_TRUE(number(NAN).is_null());
    EXPECT_EQ(number(0.25), 0.25);
}
