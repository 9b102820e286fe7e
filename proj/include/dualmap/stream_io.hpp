#pragma once

// `.dmos` observation-stream format. See docs/formats.md for the byte layout.

#include "dualmap/observation.hpp"

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace dualmap {

inline constexpr std::uint32_t kStreamVersion = 1;

struct StreamHeader {
    std::uint32_t version = kStreamVersion;
    std::size_t dim = 512;
    double voxel = 0.05;
    std::size_t min_points = 10;
    std::vector<std::string> vocabulary;
    /// Opaque JSON object holding the effective config of the producer.
    std::string config_json = "{}";

    bool operator==(const StreamHeader&) const = default;
};

struct Rejection {
    std::uint64_t frame_id = 0;
    std::optional<std::size_t> observation;  ///< nullopt: the whole record
    std::size_t offset = 0;                  ///< byte offset of the record
    std::string reason;
};

/// Pull-based reader. Construction parses the header and throws DataError on
/// bad magic or version; invalid records are dropped and listed in rejections().
class StreamReader {
public:
    explicit StreamReader(std::istream& in);
    ~StreamReader();
    StreamReader(const StreamReader&) = delete;
    StreamReader& operator=(const StreamReader&) = delete;

    const StreamHeader& header() const;
    std::optional<FrameRecord> next();
    const std::vector<Rejection>& rejections() const;

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

struct StreamContents {
    StreamHeader header;
    std::vector<FrameRecord> frames;
    std::vector<Rejection> rejections;
};

StreamContents read_stream(std::istream& in);
StreamContents read_stream_file(const std::string& path);

/// Encodes the frames; throws DataError naming the frame and field on any
/// invariant violation. Returns the number of records written.
std::size_t write_stream(const StreamHeader& header, const std::vector<FrameRecord>& frames,
                         std::ostream& out);
std::vector<std::uint8_t> encode_stream(const StreamHeader& header,
                                        const std::vector<FrameRecord>& frames);

/// Incremental writer used by producers that generate frames on the fly.
class StreamWriter {
public:
    StreamWriter(std::ostream& out, StreamHeader header);
    void write(const FrameRecord& frame);
    std::size_t records() const { return records_; }

private:
    std::ostream& out_;
    StreamHeader header_;
    std::optional<std::uint64_t> last_frame_;
    std::size_t records_ = 0;
};

}  // namespace dualmap
