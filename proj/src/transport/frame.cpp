#include "shardemu/transport/frame.hpp"

#include <cstring>

namespace shardemu {

std::vector<std::uint8_t> encode_frame(const MessageEnvelope& env) {
    nlohmann::json j{{"type", to_string(env.type)}, {"sender", env.sender.str()}, {"body", env.body}};
    std::string payload = j.dump();
    auto len = static_cast<std::uint32_t>(payload.size());
    std::vector<std::uint8_t> frame(4 + payload.size());
    frame[0] = static_cast<std::uint8_t>(len >> 24);
    frame[1] = static_cast<std::uint8_t>(len >> 16);
    frame[2] = static_cast<std::uint8_t>(len >> 8);
    frame[3] = static_cast<std::uint8_t>(len);
    std::memcpy(frame.data() + 4, payload.data(), payload.size());
    return frame;
}

MessageEnvelope decode_frame(std::span<const std::uint8_t> frame) {
    if (frame.size() < 4) throw FrameError(FrameErrc::FrameTooShort, "frame shorter than its length prefix");
    std::uint32_t len = std::uint32_t{frame[0]} << 24 | std::uint32_t{frame[1]} << 16 |
                        std::uint32_t{frame[2]} << 8 | std::uint32_t{frame[3]};
    if (frame.size() < 4 + static_cast<std::size_t>(len)) {
        throw FrameError(FrameErrc::FrameTooShort, "frame truncated: need " + std::to_string(len) + " payload bytes");
    }
    auto payload = frame.subspan(4, len);
    nlohmann::json j = nlohmann::json::parse(payload.begin(), payload.end(), nullptr, false);
    if (j.is_discarded() || !j.is_object()) throw FrameError(FrameErrc::BadJson, "payload is not a JSON object");

    auto type_it = j.find("type");
    auto sender_it = j.find("sender");
    if (type_it == j.end() || !type_it->is_string() || sender_it == j.end() || !sender_it->is_string() ||
        !j.contains("body")) {
        throw FrameError(FrameErrc::BadJson, "envelope lacks type/sender/body");
    }
    auto type = msg_type_from_string(type_it->get<std::string>());
    if (!type) throw FrameError(FrameErrc::UnknownType, "unknown message type: " + type_it->get<std::string>());

    MessageEnvelope env;
    env.type = *type;
    try {
        env.sender = Endpoint::parse(sender_it->get<std::string>());
    } catch (const ParseError& e) {
        throw FrameError(FrameErrc::BadJson, e.what());
    }
    env.body = std::move(j["body"]);
    return env;
}

void FrameReader::feed(std::span<const std::uint8_t> bytes) {
    if (pos_ > 0 && pos_ == buf_.size()) {
        buf_.clear();
        pos_ = 0;
    }
    buf_.insert(buf_.end(), bytes.begin(), bytes.end());
}

std::optional<MessageEnvelope> FrameReader::next() {
    std::span<const std::uint8_t> rest(buf_.data() + pos_, buf_.size() - pos_);
    if (rest.size() < 4) return std::nullopt;
    std::uint32_t len = std::uint32_t{rest[0]} << 24 | std::uint32_t{rest[1]} << 16 | std::uint32_t{rest[2]} << 8 |
                        std::uint32_t{rest[3]};
    if (rest.size() < 4 + static_cast<std::size_t>(len)) return std::nullopt;
    auto env = decode_frame(rest.first(4 + len));
    pos_ += 4 + len;
    if (pos_ > (1u << 20) && pos_ * 2 > buf_.size()) {
        buf_.erase(buf_.begin(), buf_.begin() + static_cast<std::ptrdiff_t>(pos_));
        pos_ = 0;
    }
    return env;
}

}  // namespace shardemu
