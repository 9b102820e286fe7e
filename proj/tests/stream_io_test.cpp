#include "dualmap/binary_io.hpp"
#include "dualmap/error.hpp"
#include "dualmap/stream_io.hpp"
#include "test_util.hpp"

#include <gtest/gtest.h>

#include <cstring>
#include <sstream>

using namespace dualmap;

namespace {

constexpr std::size_t kDim = 8;

// Features whose entries are exact in single precision, so the stream's
// float encoding round-trips bit-for-bit.
FeatureVec float_feature(Rng& rng) {
    Eigen::VectorXd v(kDim);
    for (auto& x : v) x = static_cast<double>(static_cast<float>(rng.uniform(-1, 1)));
    return FeatureVec(v);
}

StreamHeader header() {
    StreamHeader h;
    h.dim = kDim;
    h.voxel = 0.05;
    h.min_points = 3;
    h.vocabulary = {"chair", "table", "mug"};
    h.config_json = R"({"seed":1})";
    return h;
}

std::vector<FrameRecord> frames(std::size_t n) {
    Rng rng(9);
    std::vector<FrameRecord> out;
    for (std::size_t i = 0; i < n; ++i) {
        std::vector<Observation> obs;
        for (int k = 0; k < 3; ++k) {
            const std::optional<std::string> cls =
                k == 2 ? std::nullopt : std::optional<std::string>(header().vocabulary[k]);
            obs.push_back(test::obs(test::random_cloud(rng, 5 + k, Point3::Zero(), Point3::Ones()),
                                    float_feature(rng), cls, 0));
        }
        auto f = test::frame(10 + 2 * i, std::move(obs));
        f.pose = Pose::planar(0.5 * i, 0.1, 0.2 * i);
        if (i % 2 == 0) f.full_cloud = test::random_cloud(rng, 20, Point3::Zero(), Point3::Ones());
        out.push_back(std::move(f));
    }
    return out;
}

StreamContents decode(const std::vector<std::uint8_t>& bytes) {
    std::istringstream in(std::string(bytes.begin(), bytes.end()));
    return read_stream(in);
}

std::size_t header_size(const std::vector<std::uint8_t>& bytes) {
    std::uint32_t len = 0;
    std::memcpy(&len, bytes.data() + 8, 4);
    return 12 + len;
}

}  // namespace

TEST(Stream, RoundTripIsLossless) {
    const auto in = frames(6);
    const auto bytes = encode_stream(header(), in);
    const auto out = decode(bytes);
    EXPECT_EQ(out.header, header());
    EXPECT_TRUE(out.rejections.empty());
    ASSERT_EQ(out.frames.size(), in.size());
    for (std::size_t i = 0; i < in.size(); ++i) EXPECT_EQ(out.frames[i], in[i]) << "frame " << i;
    EXPECT_EQ(encode_stream(out.header, out.frames), bytes);
}

TEST(Stream, EmptyStream) {
    const auto out = decode(encode_stream(header(), {}));
    EXPECT_TRUE(out.frames.empty());
    EXPECT_TRUE(out.rejections.empty());
}

TEST(Stream, WriterCountsRecords) {
    std::ostringstream os;
    EXPECT_EQ(write_stream(header(), frames(4), os), 6u);
}

TEST(Stream, BadMagicThrows) {
    auto bytes = encode_stream(header(), frames(1));
    bytes[0] = 'X';
    EXPECT_THROW(decode(bytes), DataError);
}

TEST(Stream, BadVersionThrows) {
    auto bytes = encode_stream(header(), frames(1));
    bytes[4] = 9;
    EXPECT_THROW(decode(bytes), DataError);
}

TEST(Stream, TruncatedHeaderThrows) {
    auto bytes = encode_stream(header(), {});
    bytes.resize(bytes.size() - 3);
    EXPECT_THROW(decode(bytes), DataError);
}

TEST(Stream, TruncatedRecordThrows) {
    auto bytes = encode_stream(header(), frames(2));
    bytes.resize(bytes.size() - 7);
    EXPECT_THROW(decode(bytes), DataError);
}

TEST(Stream, WriterRejectsInvalidObservations) {
    auto f = frames(1);
    f[0].observations[1].class_id = "sofa";
    EXPECT_THROW(encode_stream(header(), f), DataError);
    f = frames(1);
    f[0].observations[0].timestamp = 3;
    EXPECT_THROW(encode_stream(header(), f), DataError);
    f = frames(1);
    f[0].observations[0].cloud = PointCloud({Point3::Zero()});
    EXPECT_THROW(encode_stream(header(), f), DataError);
    f = frames(2);
    f[1].frame_id = f[0].frame_id;
    f[1].observations.clear();
    EXPECT_THROW(encode_stream(header(), f), DataError);
}

TEST(Stream, OutOfRangeClassIsRejectedAndListed) {
    auto bytes = encode_stream(header(), frames(2));
    // First observation's class index: record head (5), frame id (8), pose (56), count (4), timestamp (8).
    const std::size_t at = header_size(bytes) + 5 + 8 + 56 + 4 + 8;
    const std::int32_t bad = 17;
    std::memcpy(bytes.data() + at, &bad, 4);
    const auto out = decode(bytes);
    ASSERT_EQ(out.frames.size(), 2u);
    EXPECT_EQ(out.frames[0].observations.size(), 2u);
    ASSERT_EQ(out.rejections.size(), 1u);
    EXPECT_EQ(out.rejections[0].frame_id, 10u);
    EXPECT_EQ(out.rejections[0].observation, std::optional<std::size_t>(0));
    EXPECT_EQ(out.rejections[0].offset, header_size(bytes));
}

TEST(Stream, NonIncreasingFrameIsRejected) {
    const auto a = encode_stream(header(), frames(2));
    const auto b = encode_stream(header(), frames(1));
    std::vector<std::uint8_t> joined = a;
    joined.insert(joined.end(), b.begin() + static_cast<std::ptrdiff_t>(header_size(b)), b.end());
    const auto out = decode(joined);
    EXPECT_EQ(out.frames.size(), 2u);
    ASSERT_GE(out.rejections.size(), 1u);
    EXPECT_EQ(out.rejections[0].reason, "frame_id not increasing");
}

TEST(Stream, NonUnitQuaternionIsRejected) {
    auto f = frames(2);
    auto bytes = encode_stream(header(), f);
    const std::size_t qw = header_size(bytes) + 5 + 8 + 24;
    const double bad = 3.0;
    std::memcpy(bytes.data() + qw, &bad, 8);
    const auto out = decode(bytes);
    ASSERT_EQ(out.frames.size(), 1u);
    EXPECT_EQ(out.frames[0].frame_id, 12u);
    ASSERT_FALSE(out.rejections.empty());
    EXPECT_EQ(out.rejections[0].reason, "pose");
}

TEST(Stream, PullReaderYieldsFramesInOrder) {
    const auto bytes = encode_stream(header(), frames(3));
    std::istringstream in(std::string(bytes.begin(), bytes.end()));
    StreamReader r(in);
    EXPECT_EQ(r.header().vocabulary.size(), 3u);
    std::vector<std::uint64_t> ids;
    while (auto f = r.next()) ids.push_back(f->frame_id);
    EXPECT_EQ(ids, (std::vector<std::uint64_t>{10, 12, 14}));
}

TEST(Stream, ObservationBelowMinimumPointsIsDropped) {
    auto f = frames(2);
    f[0].observations[0].cloud = PointCloud({Point3(0, 0, 0), Point3(0.1, 0, 0), Point3(0.2, 0, 0)});
    auto bytes = encode_stream(header(), f);
    // Raise the header's minimum from 3 to 4 in place.
    const std::string from = "\"min_points\":3", to = "\"min_points\":4";
    std::string text(bytes.begin(), bytes.end());
    const auto at = text.find(from);
    ASSERT_NE(at, std::string::npos);
    std::copy(to.begin(), to.end(), bytes.begin() + static_cast<std::ptrdiff_t>(at));
    const auto out = decode(bytes);
    ASSERT_EQ(out.frames.size(), 2u);
    EXPECT_EQ(out.frames[0].observations.size(), 2u);
    EXPECT_EQ(out.frames[1].observations.size(), 3u);
    ASSERT_EQ(out.rejections.size(), 1u);
    EXPECT_EQ(out.rejections[0].observation, std::optional<std::size_t>(0));
}
