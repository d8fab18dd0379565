#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include "nnal/dataset.hpp"
#include "nnal/error.hpp"
#include "oracles.hpp"

using namespace nnal;

namespace {

std::string header() {
    std::string h = "id";
    for (int i = 0; i < 100; ++i) {
        char buf[8];
        std::snprintf(buf, sizeof buf, ",ch%03d", i);
        h += buf;
    }
    return h + ",moisture,fat,protein\n";
}

std::string row(int id, double fat, const std::string& moisture = "60", const std::string& protein = "18") {
    std::string r = std::to_string(id);
    for (int i = 0; i < 100; ++i) r += "," + std::to_string(2.5 + 0.01 * i);
    return r + "," + moisture + "," + std::to_string(fat) + "," + protein + "\n";
}

SampleSet fats_only(const std::vector<double>& fats) {
    std::vector<Sample> samples;
    for (std::size_t i = 0; i < fats.size(); ++i) {
        samples.push_back({static_cast<SampleId>(i), std::vector<double>(kSpectrumChannels, 1.0), fats[i], {}, {}});
    }
    return SampleSet(std::move(samples), "buffer");
}

}  // namespace

TEST_CASE("load_samples reads rows in order and reassigns ids") {
    std::istringstream in(header() + row(7, 10.5) + row(3, 22.0, "", "") + "\r\n");
    const auto set = load_samples(in);
    REQUIRE(set.size() == 2);
    CHECK(set[0].id == 0);
    CHECK(set[1].id == 1);
    CHECK(set[0].fat == doctest::Approx(10.5));
    CHECK(set[0].moisture.has_value());
    CHECK_FALSE(set[1].moisture.has_value());
    CHECK_FALSE(set[1].protein.has_value());
    CHECK(set[1].spectrum.size() == kSpectrumChannels);
}

TEST_CASE("load_samples accepts CRLF line endings") {
    std::string text = header() + row(0, 5.0) + row(1, 6.0);
    std::string crlf;
    for (char c : text) crlf += (c == '\n') ? std::string("\r\n") : std::string(1, c);
    std::istringstream in(crlf);
    CHECK(load_samples(in).size() == 2);
}

TEST_CASE("load_samples errors") {
    SUBCASE("header only") {
        std::istringstream in(header());
        CHECK_THROWS_AS(load_samples(in), EmptyInputError);
    }
    SUBCASE("wrong column count names the row") {
        std::istringstream in(header() + row(0, 5.0) + "1,2,3\n");
        try {
            load_samples(in);
            FAIL("expected ParseError");
        } catch (const ParseError& e) {
            CHECK(std::string(e.what()).find("row 2") != std::string::npos);
        }
    }
    SUBCASE("non-numeric field names row and column") {
        std::string bad = row(0, 5.0);
        bad.replace(bad.find(",2.510000"), 9, ",abc");
        std::istringstream in(header() + bad);
        try {
            load_samples(in);
            FAIL("expected ParseError");
        } catch (const ParseError& e) {
            const std::string msg = e.what();
            CHECK(msg.find("row 1") != std::string::npos);
            CHECK(msg.find("ch001") != std::string::npos);
        }
    }
    SUBCASE("non-finite field") {
        std::string bad = row(0, 5.0);
        bad.replace(bad.find(",2.510000"), 9, ",nan");
        std::istringstream in(header() + bad);
        CHECK_THROWS_AS(load_samples(in), ParseError);
    }
    SUBCASE("fat outside [0, 100]") {
        std::istringstream in(header() + row(0, 120.0));
        CHECK_THROWS_AS(load_samples(in), ParseError);
    }
    SUBCASE("missing header") {
        std::istringstream in("");
        CHECK_THROWS_AS(load_samples(in), ParseError);
    }
}

TEST_CASE("duplicate spectra are kept") {
    std::istringstream in(header() + row(0, 5.0) + row(1, 5.0));
    const auto set = load_samples(in);
    CHECK(set.size() == 2);
    CHECK(set[0].spectrum == set[1].spectrum);
}

TEST_CASE("write_samples then load_samples round-trips values") {
    const auto original = oracle::synthetic_samples(5, 99);
    std::stringstream buf;
    write_samples(buf, original);
    const auto loaded = load_samples(buf);
    REQUIRE(loaded.size() == original.size());
    for (std::size_t i = 0; i < original.size(); ++i) {
        CHECK(std::abs(loaded[i].fat - original[i].fat) <= 1e-12);
        CHECK(loaded[i].moisture.has_value() == original[i].moisture.has_value());
        CHECK(loaded[i].protein.has_value() == original[i].protein.has_value());
        for (std::size_t c = 0; c < kSpectrumChannels; ++c) {
            CHECK(std::abs(loaded[i].spectrum[c] - original[i].spectrum[c]) <= 1e-12);
        }
    }
}

TEST_CASE("round trip holds for random sample sets") {
    for (Seed seed = 1; seed <= 20; ++seed) {
        const auto original = oracle::synthetic_samples(1 + seed % 7, seed * 31, 0.0, 100.0);
        std::stringstream buf;
        write_samples(buf, original);
        CHECK(load_samples(buf).samples() == original.samples());
    }
}

TEST_CASE("split_validation") {
    const auto data = oracle::synthetic_samples(240, 5);
    SUBCASE("sizes") {
        const auto p = split_validation(data, 40, 11);
        CHECK(p.validation.size() == 40);
        CHECK(p.buffer.size() == 200);
        CHECK(p.training.empty());
        p.check_invariants();
    }
    SUBCASE("zero validation keeps the full set in the buffer") {
        const auto p = split_validation(data, 0, 11);
        CHECK(p.validation.empty());
        CHECK(p.buffer.samples() == data.samples());
    }
    SUBCASE("deterministic per seed") {
        CHECK(split_validation(data, 40, 11) == split_validation(data, 40, 11));
        CHECK_FALSE(split_validation(data, 40, 11).validation.ids() == split_validation(data, 40, 12).validation.ids());
    }
    SUBCASE("too large") {
        CHECK_THROWS_AS(split_validation(data, 240, 1), SizeError);
    }
}

TEST_CASE("draw_initial random") {
    const auto data = oracle::synthetic_samples(240, 5);
    const auto base = split_validation(data, 40, 3);
    const auto p = draw_initial(base, 80, InitMethod::random, 17);
    CHECK(p.training.size() == 80);
    CHECK(p.buffer.size() == 120);
    p.check_invariants();
    CHECK(p == draw_initial(base, 80, InitMethod::random, 17));

    const auto all = draw_initial(base, 200, InitMethod::random, 17);
    CHECK(all.buffer.empty());

    CHECK_THROWS_AS(draw_initial(base, 201, InitMethod::random, 17), SizeError);
    CHECK_THROWS_AS(draw_initial(p, 5, InitMethod::random, 17), StateError);
}

TEST_CASE("draw_initial spacefill matches a brute-force bin oracle") {
    std::vector<double> fats;
    for (int i = 0; i < 60; ++i) fats.push_back(i);
    const Partition base{SampleSet({}, "validation"), SampleSet({}, "training"), fats_only(fats), 60};
    const auto p = draw_initial(base, 10, InitMethod::spacefill, 0);

    // Oracle: ten bins of width 5.9 over [0, 59]; nearest member to each center.
    const double lo = 0.0, hi = 59.0, width = (hi - lo) / 10.0;
    std::set<SampleId> expected;
    for (int b = 0; b < 10; ++b) {
        const double left = lo + b * width, right = lo + (b + 1) * width, center = lo + (b + 0.5) * width;
        SampleId best = -1;
        double best_d = INFINITY;
        for (int i = 0; i < 60; ++i) {
            const bool inside = fats[i] >= left && (b == 9 ? fats[i] <= right : fats[i] < right);
            if (inside && std::abs(fats[i] - center) < best_d) {
                best_d = std::abs(fats[i] - center);
                best = i;
            }
        }
        expected.insert(best);
    }
    const auto ids = p.training.ids();
    CHECK(std::set<SampleId>(ids.begin(), ids.end()) == expected);
    CHECK(expected.size() == 10);
}

TEST_CASE("spacefill initialization covers every populated bin") {
    for (Seed seed = 1; seed <= 10; ++seed) {
        const auto data = oracle::synthetic_samples(150, seed, 0.0, 60.0);
        const auto base = split_validation(data, 0, seed);
        const std::size_t n_init = 20 + seed;
        const auto p = draw_initial(base, n_init, InitMethod::spacefill, 0);
        const auto fats = base.buffer.fats();
        const double lo = *std::min_element(fats.begin(), fats.end());
        const double hi = *std::max_element(fats.begin(), fats.end());
        auto bin_of = [&](double f) { return std::clamp(static_cast<int>(std::floor((f - lo) / ((hi - lo) / 10))), 0, 9); };
        std::vector<int> members(10, 0), picked(10, 0);
        for (double f : fats) ++members[bin_of(f)];
        for (const auto& s : p.training) ++picked[bin_of(s.fat)];
        for (int b = 0; b < 10; ++b) {
            CHECK(picked[b] >= std::min<int>(members[b], static_cast<int>(n_init / 10)));
        }
    }
}

TEST_CASE("move_samples") {
    const auto data = oracle::synthetic_samples(240, 5);
    const auto p = draw_initial(split_validation(data, 40, 3), 80, InitMethod::random, 17);

    SUBCASE("moves and preserves buffer order") {
        const auto buffer_ids = p.buffer.ids();
        const std::vector<SampleId> ids(buffer_ids.begin() + 10, buffer_ids.begin() + 15);
        const auto q = move_samples(p, ids);
        CHECK(q.training.size() == 85);
        CHECK(q.buffer.size() == 115);
        q.check_invariants();
        auto remaining = p.buffer.ids();
        remaining.erase(remaining.begin() + 10, remaining.begin() + 15);
        CHECK(q.buffer.ids() == remaining);
        const auto training_ids = q.training.ids();
        CHECK(std::vector<SampleId>(training_ids.end() - 5, training_ids.end()) == ids);
    }
    SUBCASE("empty list is identity") {
        CHECK(move_samples(p, {}) == p);
    }
    SUBCASE("id already in training leaves the partition untouched") {
        const Partition before = p;
        const std::vector<SampleId> ids{p.buffer[0].id, p.training[0].id};
        CHECK_THROWS_AS(move_samples(p, ids), MembershipError);
        CHECK(p == before);
    }
}
