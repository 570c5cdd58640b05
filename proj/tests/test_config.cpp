#include <catch2/catch_amalgamated.hpp>

#include <rompc/config.hpp>

using namespace rompc;

TEST_CASE("key-value parsing with comments and whitespace") {
    const std::string text =
        "# experiment\n"
        "n = 4\n"
        "dt = 0.02   # sampling period\n"
        "schemes = rn-rompc, nominal-soft\n"
        "\n"
        "gains = 1.0,2.5,-3\n";
    const auto kv = KeyValueFile::parse_string(text);
    REQUIRE(kv.get_int("n") == 4);
    REQUIRE(kv.get_double("dt") == Catch::Approx(0.02));
    REQUIRE(kv.get_strings("schemes") == std::vector<std::string>{"rn-rompc", "nominal-soft"});
    REQUIRE(kv.get_doubles("gains") == std::vector<double>{1.0, 2.5, -3.0});
}

TEST_CASE("parse errors carry the line number") {
    const std::string bad = "a = 1\nnot a pair\n";
    try {
        KeyValueFile::parse_string(bad, "test.cfg");
        FAIL("expected parse error");
    } catch (const std::runtime_error& e) {
        REQUIRE(std::string(e.what()).find("test.cfg:2") != std::string::npos);
    }
}

TEST_CASE("missing and malformed keys raise descriptive errors") {
    const auto kv = KeyValueFile::parse_string("x = hello\n");
    REQUIRE_THROWS_WITH(kv.get_double("x"), Catch::Matchers::ContainsSubstring("not a number"));
    REQUIRE_THROWS_WITH(kv.get_int("missing"),
                        Catch::Matchers::ContainsSubstring("missing config key"));
    REQUIRE(kv.get_double("absent", 7.5) == 7.5);
}

TEST_CASE("round trip preserves keys, order and precision") {
    KeyValueFile kv;
    kv.set_int("n", 4);
    kv.set_double("dt", 0.02);
    kv.set_double("tiny", 1.2345678901234567e-11);
    kv.set("name", "square");
    const auto reparsed = KeyValueFile::parse_string(kv.to_string());
    REQUIRE(reparsed.get_int("n") == 4);
    REQUIRE(reparsed.get_double("tiny") == 1.2345678901234567e-11);
    REQUIRE(reparsed.get_string("name") == "square");
    REQUIRE(reparsed.keys() == kv.keys());
}
