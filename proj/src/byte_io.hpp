#pragma once

#include <bit>
#include <cstdint>
#include <string>
#include <type_traits>

#include "isa2/error.hpp"

namespace isa2::detail {

// Fixed-width little-endian encoding for the binary artifact formats.

template <class T>
using bits_of = std::conditional_t<sizeof(T) == 1, std::uint8_t,
                std::conditional_t<sizeof(T) == 4, std::uint32_t, std::uint64_t>>;

template <class T>
void put_le(std::string& out, T value) {
    static_assert(sizeof(T) == 1 || sizeof(T) == 4 || sizeof(T) == 8);
    const auto bits = std::bit_cast<bits_of<T>>(value);
    for (std::size_t i = 0; i < sizeof(T); ++i) out.push_back(static_cast<char>((bits >> (8 * i)) & 0xffu));
}

template <class T>
T get_le(const std::string& in, std::size_t offset) {
    bits_of<T> bits = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i) {
        bits = static_cast<bits_of<T>>(bits | (static_cast<bits_of<T>>(static_cast<unsigned char>(in[offset + i])) << (8 * i)));
    }
    return std::bit_cast<T>(bits);
}

/// Sequential reader that throws DataError on overrun.
class ByteReader {
public:
    ByteReader(const std::string& bytes, std::string context) : bytes_(bytes), context_(std::move(context)) {}

    template <class T>
    T get() {
        if (pos_ + sizeof(T) > bytes_.size()) throw DataError(context_ + ": truncated");
        const T value = get_le<T>(bytes_, pos_);
        pos_ += sizeof(T);
        return value;
    }

    std::string get_bytes(std::size_t count) {
        if (pos_ + count > bytes_.size()) throw DataError(context_ + ": truncated");
        std::string out = bytes_.substr(pos_, count);
        pos_ += count;
        return out;
    }

    std::size_t remaining() const { return bytes_.size() - pos_; }
    const std::string& context() const { return context_; }

private:
    const std::string& bytes_;
    std::string context_;
    std::size_t pos_ = 0;
};

}  // namespace isa2::detail
