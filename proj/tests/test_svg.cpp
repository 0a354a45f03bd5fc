#include "layout_fixtures.hpp"

#include <gtest/gtest.h>

#include <cstdlib>
#include <regex>

using namespace speecheff;
using namespace testing_support;

namespace {

std::size_t count_of(const std::string& svg, const std::string& tag) {
    std::size_t n = 0;
    for (std::size_t pos = svg.find("<" + tag + " "); pos != std::string::npos; pos = svg.find("<" + tag + " ", pos + 1)) ++n;
    return n;
}

bool has_view_box(const std::string& svg) { return std::regex_search(svg, std::regex("<svg [^>]*viewBox=\"[-0-9. ]+\"")); }

} // namespace

// Set SPEECHEFF_UPDATE_GOLDEN=1 to rewrite tests/golden after an intended
// rendering change.
TEST(Golden, ByteIdenticalRender) {
    const bool update = std::getenv("SPEECHEFF_UPDATE_GOLDEN") != nullptr;
    for (const auto& c : golden_cases()) {
        const auto path = golden_path(c.name);
        if (update) spit(path, c.svg);
        ASSERT_TRUE(fs::exists(path)) << path;
        EXPECT_TRUE(slurp(path) == c.svg) << c.name << " differs from " << path;
    }
}

TEST(Golden, FixturesExerciseTheirFeatures) {
    const SpeechRecord s = golden_speech();
    EXPECT_FALSE(spiral_layout(accumulate_intervals(s)).turn_points.empty());
    const auto script = script_layout(s);
    EXPECT_GT(script.glyphs.back().line, 0u);
}

TEST(Svg, Determinism) {
    const auto a = golden_cases();
    const auto b = golden_cases();
    ASSERT_EQ(a.size(), b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        EXPECT_TRUE(a[i].svg == b[i].svg) << a[i].name;
        EXPECT_TRUE(has_view_box(a[i].svg)) << a[i].name;
    }
}

TEST(Svg, ElementCounts) {
    const auto spiral = render_svg(spiral_layout(accumulator_from({1.0, -20.0, 3.0})));
    EXPECT_EQ(count_of(spiral, "circle"), 3u);
    const auto type = render_svg(type_layout(golden_speech()));
    EXPECT_EQ(count_of(type, "rect"), 200u);
    EXPECT_EQ(count_of(type, "polyline"), 1u);
    const auto dist = render_svg(distribution_layout(golden_fit(), 0.0, 1.0));
    EXPECT_EQ(count_of(dist, "polyline"), 5u);
    std::vector<int> levels;
    const FactorTable table = golden_table(levels);
    const auto strip = render_svg(factor_strip_layout(table, "loudness", levels));
    EXPECT_EQ(count_of(strip, "circle"), 10u);
    EXPECT_EQ(count_of(strip, "rect"), 5u);
    const auto script = render_svg(script_layout(golden_speech()));
    EXPECT_EQ(count_of(script, "text"), golden_speech().words.size());
}

TEST(Svg, NumberFormatting) {
    EXPECT_EQ(svg::num(0.1), "0.100000");
    EXPECT_EQ(svg::num(-1e-9), "0.000000");
    EXPECT_EQ(svg::num(-2.5), "-2.500000");
    EXPECT_EQ(svg::num(1234567.0000004), "1234567.000000");
}

TEST(Svg, EscapesText) {
    SpeechRecord s = golden_speech();
    s.words[0].word = "<&\"'>";
    const auto out = render_svg(script_layout(s));
    EXPECT_NE(out.find("&lt;&amp;&quot;&apos;&gt;"), std::string::npos);
    EXPECT_EQ(out.find("<&"), std::string::npos);
}
