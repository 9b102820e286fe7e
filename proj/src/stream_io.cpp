#include "dualmap/stream_io.hpp"

#include "dualmap/binary_io.hpp"
#include "dualmap/error.hpp"

#include <json.hpp>

#include <fstream>
#include <map>
#include <istream>
#include <ostream>
#include <sstream>

namespace dualmap {

namespace {

constexpr char kMagic[4] = {'D', 'M', 'O', 'S'};
constexpr std::uint8_t kFrameRecord = 1;
constexpr std::uint8_t kFullCloudRecord = 2;
constexpr std::uint32_t kMaxHeaderBytes = 1u << 24;
constexpr std::uint32_t kMaxRecordBytes = 1u << 30;

using nlohmann::json;

std::string frame_label(std::uint64_t id) { return "frame " + std::to_string(id); }

std::vector<std::uint8_t> encode_header(const StreamHeader& h) {
    json j;
    j["format"] = "dmos";
    j["version"] = h.version;
    j["dim"] = h.dim;
    j["voxel"] = h.voxel;
    j["min_points"] = h.min_points;
    j["vocabulary"] = h.vocabulary;
    j["config"] = json::parse(h.config_json);
    const std::string text = j.dump();
    bin::Writer w;
    w.raw(std::string(kMagic, 4));
    w.u32(h.version);
    w.str(text);
    return std::move(w.buffer());
}

StreamHeader parse_header(std::istream& in, std::size_t& consumed) {
    char magic[4] = {};
    std::uint8_t fixed[8] = {};
    in.read(magic, 4);
    if (in.gcount() != 4 || std::string(magic, 4) != std::string(kMagic, 4)) {
        throw DataError("not a .dmos stream: bad magic at byte offset 0");
    }
    in.read(reinterpret_cast<char*>(fixed), 8);
    if (in.gcount() != 8) throw DataError("truncated .dmos header");
    bin::Reader r(std::span<const std::uint8_t>(fixed, 8), 4);
    const auto version = r.u32();
    if (version != kStreamVersion) {
        throw DataError("unsupported .dmos version " + std::to_string(version));
    }
    const auto len = r.u32();
    if (len > kMaxHeaderBytes) throw DataError("oversized .dmos header");
    std::string text(len, '\0');
    in.read(text.data(), len);
    if (static_cast<std::uint32_t>(in.gcount()) != len) throw DataError("truncated .dmos header");
    consumed = 12 + static_cast<std::size_t>(len);

    StreamHeader h;
    try {
        const auto j = json::parse(text);
        h.version = version;
        h.dim = j.at("dim").get<std::size_t>();
        h.voxel = j.at("voxel").get<double>();
        h.min_points = j.at("min_points").get<std::size_t>();
        h.vocabulary = j.at("vocabulary").get<std::vector<std::string>>();
        h.config_json = j.value("config", json::object()).dump();
    } catch (const json::exception& e) {
        throw DataError(std::string("malformed .dmos header: ") + e.what());
    }
    if (h.dim == 0 || !(h.voxel > 0.0)) throw DataError("invalid dim or voxel in .dmos header");
    return h;
}

void encode_cloud(bin::Writer& w, const PointCloud& cloud) {
    w.u32(static_cast<std::uint32_t>(cloud.size()));
    for (const auto& p : cloud.points()) {
        w.f64(p.x());
        w.f64(p.y());
        w.f64(p.z());
    }
}

std::vector<Point3> decode_points(bin::Reader& r) {
    const auto n = r.u32();
    r.need(static_cast<std::size_t>(n) * 24);
    std::vector<Point3> pts(n);
    for (auto& p : pts) {
        p.x() = r.f64();
        p.y() = r.f64();
        p.z() = r.f64();
    }
    return pts;
}

class Validator {
public:
    explicit Validator(const StreamHeader& h) : h_(h) {
        for (std::size_t i = 0; i < h.vocabulary.size(); ++i) index_.emplace(h.vocabulary[i], i);
    }

    /// Empty string when valid, otherwise the offending field.
    std::string check(const FrameRecord& f, const Observation& o) const {
        if (o.timestamp != f.frame_id) return "timestamp";
        if (o.cloud.size() < h_.min_points) return "cloud (below minimum point count)";
        if (o.feature.dim() != h_.dim) return "feature (dimension)";
        if (o.class_id && !index_.count(*o.class_id)) return "class_id (not in vocabulary)";
        return {};
    }

    std::int32_t class_index(const std::optional<std::string>& c) const {
        return c ? static_cast<std::int32_t>(index_.at(*c)) : -1;
    }

    const StreamHeader& header() const { return h_; }

private:
    const StreamHeader& h_;
    std::map<std::string, std::size_t> index_;
};

std::vector<std::uint8_t> encode_frame(const Validator& v, const FrameRecord& f) {
    bin::Writer w;
    w.u64(f.frame_id);
    w.f64(f.pose.translation.x());
    w.f64(f.pose.translation.y());
    w.f64(f.pose.translation.z());
    w.f64(f.pose.rotation.w());
    w.f64(f.pose.rotation.x());
    w.f64(f.pose.rotation.y());
    w.f64(f.pose.rotation.z());
    w.u32(static_cast<std::uint32_t>(f.observations.size()));
    for (std::size_t i = 0; i < f.observations.size(); ++i) {
        const auto& o = f.observations[i];
        if (auto field = v.check(f, o); !field.empty()) {
            throw DataError(frame_label(f.frame_id) + ", observation " + std::to_string(i) +
                            ": invalid " + field);
        }
        w.u64(o.timestamp);
        w.i32(v.class_index(o.class_id));
        encode_cloud(w, o.cloud);
        for (Eigen::Index k = 0; k < o.feature.values().size(); ++k) {
            w.f32(static_cast<float>(o.feature.values()[k]));
        }
    }
    return std::move(w.buffer());
}

void append_record(std::vector<std::uint8_t>& out, std::uint8_t type,
                   const std::vector<std::uint8_t>& payload) {
    bin::Writer w;
    w.u8(type);
    w.u32(static_cast<std::uint32_t>(payload.size()));
    out.insert(out.end(), w.buffer().begin(), w.buffer().end());
    out.insert(out.end(), payload.begin(), payload.end());
}

std::vector<std::uint8_t> encode_frame_records(const Validator& v, const FrameRecord& f) {
    std::vector<std::uint8_t> out;
    append_record(out, kFrameRecord, encode_frame(v, f));
    if (f.full_cloud) {
        bin::Writer w;
        w.u64(f.frame_id);
        encode_cloud(w, *f.full_cloud);
        append_record(out, kFullCloudRecord, w.buffer());
    }
    return out;
}

}  // namespace

struct StreamReader::Impl {
    std::istream& in;
    std::size_t offset = 0;  // declared before header: parse_header writes it
    StreamHeader header;
    std::vector<Rejection> rejections;
    std::optional<FrameRecord> pending;
    std::optional<std::uint64_t> last_frame_id;
    bool eof = false;

    explicit Impl(std::istream& s) : in(s), header(parse_header(s, offset)) {}

    // Reads one record; false at clean EOF.
    bool read_record(std::uint8_t& type, std::vector<std::uint8_t>& payload, std::size_t& at) {
        std::uint8_t head[5];
        in.read(reinterpret_cast<char*>(head), 5);
        if (in.gcount() == 0) return false;
        at = offset;
        if (in.gcount() != 5) {
            throw DataError("truncated record header at byte offset " + std::to_string(at));
        }
        bin::Reader r(std::span<const std::uint8_t>(head, 5), at);
        type = r.u8();
        const auto len = r.u32();
        if (len > kMaxRecordBytes) {
            throw DataError("oversized record at byte offset " + std::to_string(at));
        }
        payload.resize(len);
        in.read(reinterpret_cast<char*>(payload.data()), len);
        if (static_cast<std::uint32_t>(in.gcount()) != len) {
            throw DataError("truncated record at byte offset " + std::to_string(at));
        }
        offset += 5 + len;
        return true;
    }

    std::optional<FrameRecord> decode_frame(std::span<const std::uint8_t> payload, std::size_t at) {
        const Validator v(header);
        bin::Reader r(payload, at + 5);
        FrameRecord f;
        std::size_t obs_index = 0;
        try {
            f.frame_id = r.u64();
            f.pose.translation.x() = r.f64();
            f.pose.translation.y() = r.f64();
            f.pose.translation.z() = r.f64();
            const double qw = r.f64(), qx = r.f64(), qy = r.f64(), qz = r.f64();
            f.pose.rotation = Eigen::Quaterniond(qw, qx, qy, qz);
            if (!f.pose.translation.allFinite() || !f.pose.rotation.coeffs().allFinite() ||
                std::abs(f.pose.rotation.norm() - 1.0) > 1e-6) {
                rejections.push_back({f.frame_id, std::nullopt, at, "pose"});
                return std::nullopt;
            }
            if (last_frame_id && f.frame_id <= *last_frame_id) {
                rejections.push_back({f.frame_id, std::nullopt, at, "frame_id not increasing"});
                return std::nullopt;
            }
            const auto n = r.u32();
            for (obs_index = 0; obs_index < n; ++obs_index) {
                Observation o;
                o.timestamp = r.u64();
                const auto cls = r.i32();
                auto pts = decode_points(r);
                r.need(header.dim * 4);
                Eigen::VectorXd feat(static_cast<Eigen::Index>(header.dim));
                for (Eigen::Index k = 0; k < feat.size(); ++k) feat[k] = r.f32();

                std::string problem;
                if (cls < -1 || cls >= static_cast<std::int32_t>(header.vocabulary.size())) {
                    problem = "class_id (index out of range)";
                } else if (cls >= 0) {
                    o.class_id = header.vocabulary[static_cast<std::size_t>(cls)];
                }
                if (problem.empty()) {
                    try {
                        o.cloud = PointCloud(std::move(pts));
                        o.feature = FeatureVec(std::move(feat));
                        problem = v.check(f, o);
                    } catch (const DataError& e) {
                        problem = e.what();
                    }
                }
                if (!problem.empty()) {
                    rejections.push_back({f.frame_id, obs_index, at, problem});
                    continue;
                }
                f.observations.push_back(std::move(o));
            }
            if (!r.at_end()) {
                rejections.push_back({f.frame_id, std::nullopt, at, "trailing bytes in frame record"});
                return std::nullopt;
            }
        } catch (const DataError& e) {
            rejections.push_back({f.frame_id, std::nullopt, at, e.what()});
            return std::nullopt;
        }
        last_frame_id = f.frame_id;
        return f;
    }

    void attach_cloud(std::span<const std::uint8_t> payload, std::size_t at) {
        bin::Reader r(payload, at + 5);
        std::uint64_t id = 0;
        try {
            id = r.u64();
            auto pts = decode_points(r);
            if (!r.at_end()) throw DataError("trailing bytes in full-cloud record");
            if (!pending || pending->frame_id != id || pending->full_cloud) {
                rejections.push_back({id, std::nullopt, at, "full cloud without a matching frame"});
                return;
            }
            pending->full_cloud = PointCloud(std::move(pts));
        } catch (const DataError& e) {
            rejections.push_back({id, std::nullopt, at, e.what()});
        }
    }

    std::optional<FrameRecord> next() {
        std::uint8_t type = 0;
        std::vector<std::uint8_t> payload;
        std::size_t at = 0;
        while (!eof) {
            if (!read_record(type, payload, at)) {
                eof = true;
                break;
            }
            if (type == kFrameRecord) {
                auto f = decode_frame(payload, at);
                if (!f) continue;
                if (pending) {
                    auto out = std::move(pending);
                    pending = std::move(f);
                    return out;
                }
                pending = std::move(f);
            } else if (type == kFullCloudRecord) {
                attach_cloud(payload, at);
            } else {
                throw DataError("unknown record type " + std::to_string(type) + " at byte offset " +
                                std::to_string(at));
            }
        }
        auto out = std::move(pending);
        pending.reset();
        return out;
    }
};

StreamReader::StreamReader(std::istream& in) : impl_(std::make_unique<Impl>(in)) {}
StreamReader::~StreamReader() = default;
const StreamHeader& StreamReader::header() const { return impl_->header; }
std::optional<FrameRecord> StreamReader::next() { return impl_->next(); }
const std::vector<Rejection>& StreamReader::rejections() const { return impl_->rejections; }

StreamContents read_stream(std::istream& in) {
    StreamReader reader(in);
    StreamContents out;
    while (auto f = reader.next()) out.frames.push_back(std::move(*f));
    out.header = reader.header();
    out.rejections = reader.rejections();
    return out;
}

StreamContents read_stream_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open stream '" + path + "'");
    return read_stream(in);
}

std::vector<std::uint8_t> encode_stream(const StreamHeader& header,
                                        const std::vector<FrameRecord>& frames) {
    std::vector<std::uint8_t> out = encode_header(header);
    const Validator v(header);
    std::optional<std::uint64_t> last;
    for (const auto& f : frames) {
        if (last && f.frame_id <= *last) {
            throw DataError(frame_label(f.frame_id) + ": invalid frame_id (not increasing)");
        }
        last = f.frame_id;
        auto rec = encode_frame_records(v, f);
        out.insert(out.end(), rec.begin(), rec.end());
    }
    return out;
}

std::size_t write_stream(const StreamHeader& header, const std::vector<FrameRecord>& frames,
                         std::ostream& out) {
    const auto bytes = encode_stream(header, frames);
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    std::size_t records = 0;
    for (const auto& f : frames) records += f.full_cloud ? 2 : 1;
    return records;
}

StreamWriter::StreamWriter(std::ostream& out, StreamHeader header)
    : out_(out), header_(std::move(header)) {
    const auto bytes = encode_header(header_);
    out_.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

void StreamWriter::write(const FrameRecord& frame) {
    if (last_frame_ && frame.frame_id <= *last_frame_) {
        throw DataError(frame_label(frame.frame_id) + ": invalid frame_id (not increasing)");
    }
    last_frame_ = frame.frame_id;
    const Validator v(header_);
    const auto bytes = encode_frame_records(v, frame);
    out_.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    records_ += frame.full_cloud ? 2 : 1;
}

}  // namespace dualmap
