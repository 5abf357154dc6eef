#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "shardemu/transport/envelope.hpp"

namespace shardemu {

enum class FrameErrc : std::uint8_t { FrameTooShort, BadJson, UnknownType };

class FrameError : public std::runtime_error {
public:
    FrameError(FrameErrc code, const std::string& what) : std::runtime_error(what), code_(code) {}
    FrameErrc code() const { return code_; }

private:
    FrameErrc code_;
};

// Frame layout: 4-byte big-endian payload length, then UTF-8 JSON
// {"type": ..., "sender": ..., "body": ...}.
std::vector<std::uint8_t> encode_frame(const MessageEnvelope& env);
MessageEnvelope decode_frame(std::span<const std::uint8_t> frame);

// Reassembles frames from a byte stream.
class FrameReader {
public:
    void feed(std::span<const std::uint8_t> bytes);
    // Next complete envelope, or nullopt if more bytes are needed.
    std::optional<MessageEnvelope> next();
    std::size_t buffered() const { return buf_.size() - pos_; }

private:
    std::vector<std::uint8_t> buf_;
    std::size_t pos_ = 0;
};

}  // namespace shardemu
