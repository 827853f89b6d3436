#include <doctest.h>

#include "mwmr/core.hpp"

using namespace mwmr;

TEST_CASE("tags order by timestamp, then writer, then write counter") {
    CHECK(Tag{1, 9, 9} < Tag{2, 0, 0});
    CHECK(Tag{2, 1, 5} < Tag{2, 2, 0});
    CHECK(Tag{2, 2, 1} < Tag{2, 2, 2});
    CHECK(compare_tags(Tag{3, 1, 0}, Tag{3, 1, 0}) == std::strong_ordering::equal);
    CHECK(kInitialTag.is_initial());
    CHECK_FALSE(Tag{0, 0, 1}.is_initial());
    CHECK(Tag{4, 2, 7}.write_id() == WriteId{2, 7});
}

TEST_CASE("next_tag increments the timestamp and stamps the writer") {
    CHECK(next_tag(Tag{5, 3, 2}, writer(1), 4) == Tag{6, 1, 4});
    CHECK(next_tag(kInitialTag, writer(0), 1) == Tag{1, 0, 1});
    CHECK_THROWS_AS(next_tag(kInitialTag, reader(0), 1), std::invalid_argument);
    CHECK_THROWS_AS(next_tag(kInitialTag, server(0), 1), std::invalid_argument);
}

TEST_CASE("tag formatting") { CHECK(to_string(Tag{12, 3, 4}) == "(12,3,4)"); }

TEST_CASE("roles and event kinds round-trip through their names") {
    for (auto r : {Role::Reader, Role::Writer, Role::Server}) CHECK(role_from_string(to_string(r)) == r);
    for (auto k : {EventKind::ReadInvoke, EventKind::ReadRespond, EventKind::WriteInvoke, EventKind::WriteRespond}) {
        CHECK(event_kind_from_string(to_string(k)) == k);
    }
    CHECK_THROWS_AS(role_from_string("client"), std::invalid_argument);
    CHECK_THROWS_AS(event_kind_from_string("read"), std::invalid_argument);
    CHECK(is_invoke(EventKind::WriteInvoke));
    CHECK_FALSE(is_invoke(EventKind::ReadRespond));
    CHECK(is_read(EventKind::ReadRespond));
}

TEST_CASE("seconds are printed and parsed exactly") {
    CHECK(format_seconds(Nanos{1'250'000'000}) == "1.250000000");
    CHECK(format_seconds(Nanos{7}) == "0.000000007");
    CHECK(format_seconds(Nanos{-1'500'000'000}) == "-1.500000000");
    CHECK(parse_seconds("1.25") == Nanos{1'250'000'000});
    CHECK(parse_seconds("3") == Nanos{3'000'000'000});
    CHECK(parse_seconds("0.000000001") == Nanos{1});
    CHECK(parse_seconds("-0.5") == Nanos{-500'000'000});
    CHECK_THROWS_AS(parse_seconds("0.0000000001"), std::invalid_argument);
    CHECK_THROWS_AS(parse_seconds("x"), std::invalid_argument);
    CHECK_THROWS_AS(parse_seconds(""), std::invalid_argument);
    for (std::int64_t ns : {0LL, 1LL, 999'999'999LL, 1'000'000'000LL, 123'456'789'012LL}) {
        CHECK(parse_seconds(format_seconds(Nanos{ns})) == Nanos{ns});
    }
    CHECK(seconds(0.010) == Nanos{10'000'000});
}
