#include <doctest.h>

#include <cmath>
#include <cstring>
#include <fstream>
#include <numbers>

#include "pat/errors.hpp"
#include "pat/geometry.hpp"
#include "pat/io.hpp"
#include "pat/rng.hpp"
#include "support.hpp"

using namespace pat;

TEST_SUITE("geometry") {
    TEST_CASE("lower arc below y = -11.1 mm on R = 50 mm") {
        const SensorGeometry g = make_lower_arc(50.0, 28, -11.1);
        REQUIRE(g.size() == 28);
        for (const Point& s : g.positions()) {
            CHECK(s.y < -11.1);
            CHECK(std::abs(std::hypot(s.x, s.y) - 50.0) < 1e-9 * 50.0);
        }
    }

    TEST_CASE("adjacent detectors are equally spaced in angle") {
        const double alpha = std::asin(-11.1 / 50.0);
        const double span = (2.0 * std::numbers::pi + alpha) - (std::numbers::pi - alpha);
        const SensorGeometry g = make_lower_arc(50.0, 28, -11.1);
        for (std::size_t m = 0; m + 1 < g.size(); ++m) {
            const Point a = g.position(m), b = g.position(m + 1);
            double gap = std::atan2(b.y, b.x) - std::atan2(a.y, a.x);
            if (gap < 0) gap += 2.0 * std::numbers::pi;
            CHECK(gap == doctest::Approx(span / 28.0).epsilon(1e-12));
        }
        CHECK(g.weight() == doctest::Approx(50.0 * span / 28.0));
    }

    TEST_CASE("four detectors on the unit circle sit at odd multiples of pi/4") {
        const SensorGeometry g = make_full_circle(1.0, 4);
        for (std::size_t m = 0; m < 4; ++m) {
            const double theta = (2.0 * m + 1.0) * std::numbers::pi / 4.0;
            CHECK(g.position(m).x == doctest::Approx(std::cos(theta)));
            CHECK(g.position(m).y == doctest::Approx(std::sin(theta)));
            CHECK(std::hypot(g.position(m).x, g.position(m).y) == doctest::Approx(1.0));
        }
        CHECK(g.is_full_circle());
    }

    TEST_CASE("arc construction rejects bad input") {
        CHECK_THROWS_AS(make_arc_geometry(0.0, 4, 0.0, 1.0), InvalidArgument);
        CHECK_THROWS_AS(make_arc_geometry(-1.0, 4, 0.0, 1.0), InvalidArgument);
        CHECK_THROWS_AS(make_arc_geometry(1.0, 1, 0.0, 1.0), InvalidArgument);
        CHECK_THROWS_AS(make_arc_geometry(1.0, 4, 1.0, 1.0), InvalidArgument);
        CHECK_THROWS_AS(make_arc_geometry(1.0, 4, 0.0, 7.0), InvalidArgument);
        CHECK_THROWS_AS(make_lower_arc(10.0, 4, -11.0), InvalidArgument);
    }

    TEST_CASE("pixel centers and bilinear sampling") {
        GridImage img(4, 2, {0.0, 4.0, 0.0, 2.0});
        CHECK(img.dx() == 1.0);
        CHECK(img.x_center(0) == 0.5);
        CHECK(img.y_center(0) == 1.5);  // top row
        img.at(1, 0) = 2.0;
        img.at(2, 0) = 4.0;
        CHECK(img.sample({1.5, 1.5}) == doctest::Approx(2.0));
        CHECK(img.sample({2.0, 1.5}) == doctest::Approx(3.0));
        CHECK(img.sample({-0.1, 1.5}) == 0.0);
        CHECK_THROWS_AS(GridImage(0, 2, kDefaultExtent), InvalidArgument);
        CHECK_THROWS_AS(GridImage(2, 2, {1.0, 1.0, 0.0, 1.0}), InvalidArgument);
        CHECK_THROWS_AS(GridImage(2, 2, kDefaultExtent, std::vector<double>(3)), InvalidArgument);
    }

    TEST_CASE("non-square extent keeps separate spacings") {
        const GridImage img(128, 128, kDefaultExtent);
        CHECK(img.dx() == doctest::Approx(20.0 / 128));
        CHECK(img.dy() == doctest::Approx(25.0 / 128));
    }
}

TEST_SUITE("rng") {
    TEST_CASE("same seed gives the same stream; derived seeds differ") {
        Rng a(Seed{42}), b(Seed{42}), c(Seed{43});
        for (int i = 0; i < 100; ++i) CHECK(a.next_u64() == b.next_u64());
        CHECK(Rng(Seed{42}).next_u64() != c.next_u64());
        CHECK(derive_seed(Seed{1}, 1, 0) != derive_seed(Seed{1}, 2, 0));
        CHECK(derive_seed(Seed{1}, 1, 0) != derive_seed(Seed{1}, 1, 1));
        CHECK(derive_seed(Seed{1}, 1, 7) == derive_seed(Seed{1}, 1, 7));
    }

    TEST_CASE("splitmix64 reference output") {
        // First output of the reference implementation for state 0.
        std::uint64_t s = 0;
        CHECK(splitmix64(s) == 0xe220a8397b1dcdafULL);
    }

    TEST_CASE("distributions") {
        Rng r(Seed{7});
        double sum = 0.0, sq = 0.0;
        const int n = 200000;
        for (int i = 0; i < n; ++i) {
            const double u = r.uniform();
            REQUIRE(u >= 0.0);
            REQUIRE(u < 1.0);
            const double z = r.normal();
            sum += z;
            sq += z * z;
        }
        CHECK(std::abs(sum / n) < 0.01);
        CHECK(std::abs(sq / n - 1.0) < 0.02);
        for (int i = 0; i < 1000; ++i) {
            const auto k = r.uniform_int(2, 6);
            REQUIRE(k >= 2);
            REQUIRE(k <= 6);
        }
    }
}

TEST_SUITE("io") {
    TEST_CASE("image container round trip is bitwise on the f32 payload") {
        Rng rng(Seed{3});
        GridImage img = test::random_image(7, 5, kDefaultExtent, rng);
        for (double& v : img.values()) v = static_cast<float>(v);
        const auto dir = test::scratch_dir("io_image");
        write_image(dir / "a.pati", img);
        const GridImage back = read_image(dir / "a.pati");
        CHECK(back.width() == 7);
        CHECK(back.height() == 5);
        CHECK(back.extent() == img.extent());
        CHECK(std::memcmp(back.values().data(), img.values().data(), img.size() * sizeof(double)) == 0);
        CHECK(encode_image(back) == encode_image(img));
    }

    TEST_CASE("sinogram container round trip") {
        Rng rng(Seed{5});
        const SensorGeometry g = make_lower_arc(50.0, 28, -11.1);
        Sinogram s = test::random_sinogram(g, 33, 0.25, rng);
        for (double& v : s.values()) v = static_cast<float>(v);
        const Sinogram back = decode_sinogram(encode_sinogram(s));
        CHECK(back.geometry() == g);
        CHECK(back.samples() == 33);
        CHECK(back.dt() == 0.25);
        CHECK(std::equal(back.values().begin(), back.values().end(), s.values().begin()));
    }

    TEST_CASE("decode errors are distinct") {
        const auto dir = test::scratch_dir("io_errors");
        { std::ofstream(dir / "empty.pati", std::ios::binary); }
        CHECK_THROWS_AS(read_image(dir / "empty.pati"), TruncatedError);

        auto bytes = encode_image(GridImage(3, 3, kDefaultExtent));
        auto bad = bytes;
        bad[0] = 'X';
        CHECK_THROWS_AS(decode_image(bad), BadMagicError);
        bad = bytes;
        bad[4] = 9;
        CHECK_THROWS_AS(decode_image(bad), VersionError);
        bad = bytes;
        bad.resize(bad.size() - 2);
        CHECK_THROWS_AS(decode_image(bad), TruncatedError);
        bad = bytes;
        bad.push_back(0);
        CHECK_THROWS_AS(decode_image(bad), FormatError);
        CHECK_THROWS_AS(decode_sinogram(bytes), BadMagicError);
        CHECK_THROWS_AS(read_image(dir / "missing.pati"), IoError);
    }

    TEST_CASE("pgm export writes a P5 header") {
        const auto dir = test::scratch_dir("io_pgm");
        GridImage img(4, 3, kDefaultExtent);
        img.at(1, 1) = 1.0;
        export_pgm(dir / "a.pgm", img);
        const auto data = read_file(dir / "a.pgm");
        const std::string head(data.begin(), data.begin() + 2);
        CHECK(head == "P5");
    }
}
