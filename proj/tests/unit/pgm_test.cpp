#include <gtest/gtest.h>

#include "stripedepth/errors.hpp"
#include "stripedepth/pgm.hpp"
#include "support.hpp"

using namespace stripedepth;
using reconstruct::Gray8Image;

namespace {

Gray8Image sample_image() {
    Gray8Image g;
    g.width = 3;
    g.height = 2;
    g.pixels = {0, 10, 255, 128, 127, 1};
    return g;
}

}  // namespace

TEST(Pgm, HeaderAndRasterLayout) {
    const std::string bytes = pgm::encode(sample_image());
    const std::string header = "P5\n3 2\n255\n";
    ASSERT_EQ(bytes.size(), header.size() + 6);
    EXPECT_EQ(bytes.substr(0, header.size()), header);
    EXPECT_EQ(static_cast<unsigned char>(bytes[header.size() + 2]), 255);
}

TEST(Pgm, RoundTrip) {
    const Gray8Image g = sample_image();
    const Gray8Image back = pgm::decode(pgm::encode(g));
    EXPECT_EQ(back.width, g.width);
    EXPECT_EQ(back.height, g.height);
    EXPECT_EQ(back.pixels, g.pixels);
}

TEST(Pgm, HeaderCommentsAreSkipped) {
    const std::string bytes = std::string("P5\n# made by hand\n2 1\n# depth\n255\n") + '\x07' + '\xff';
    const Gray8Image g = pgm::decode(bytes);
    EXPECT_EQ(g.width, 2u);
    EXPECT_EQ(g.pixels, (std::vector<std::uint8_t>{7, 255}));
}

TEST(Pgm, RejectsMalformedInput) {
    EXPECT_THROW(pgm::decode("P2\n1 1\n255\n0"), IoError);
    EXPECT_THROW(pgm::decode(std::string("P5\n1 1\n65535\n") + "ab"), IoError);
    EXPECT_THROW(pgm::decode("P5\n4 4\n255\nabc"), IoError);
    EXPECT_THROW(pgm::decode("P5\nx y\n255\n"), IoError);
}

TEST(Pgm, FileRoundTripAndMissingFile) {
    testing_support::TempDir dir("pgm");
    const auto path = dir.path() / "img.pgm";
    pgm::write(path, sample_image());
    EXPECT_EQ(pgm::read(path).pixels, sample_image().pixels);
    EXPECT_THROW(pgm::read(dir.path() / "absent.pgm"), IoError);
}
