#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include "aart/errors.hpp"

namespace aart {

// Little-endian binary file reader with byte-offset error reporting.
class ByteReader {
public:
    explicit ByteReader(const std::string& path) : path_(path), in_(path, std::ios::binary) {
        if (!in_) throw IoError("cannot open " + path + " for reading");
    }

    void bytes(void* dst, std::size_t n) {
        in_.read(static_cast<char*>(dst), static_cast<std::streamsize>(n));
        if (static_cast<std::size_t>(in_.gcount()) != n) {
            throw IoError(path_ + ": truncated at byte offset " + std::to_string(offset_));
        }
        offset_ += n;
    }

    std::uint8_t u8() {
        std::uint8_t b;
        bytes(&b, 1);
        return b;
    }

    std::uint16_t u16() {
        std::uint8_t b[2];
        bytes(b, 2);
        return static_cast<std::uint16_t>(b[0] | (static_cast<std::uint16_t>(b[1]) << 8));
    }

    std::uint32_t u32() {
        std::uint8_t b[4];
        bytes(b, 4);
        std::uint32_t v = 0;
        for (int i = 3; i >= 0; --i) v = (v << 8) | b[i];
        return v;
    }

    std::uint64_t u64() {
        std::uint8_t b[8];
        bytes(b, 8);
        std::uint64_t v = 0;
        for (int i = 7; i >= 0; --i) v = (v << 8) | b[i];
        return v;
    }

    float f32() {
        const std::uint32_t bits = u32();
        float f;
        std::memcpy(&f, &bits, 4);
        return f;
    }

    void f32_array(float* dst, std::size_t count) {
        if constexpr (std::endian::native == std::endian::little) {
            bytes(dst, count * 4);
        } else {
            for (std::size_t i = 0; i < count; ++i) dst[i] = f32();
        }
    }

    std::string str(std::size_t n) {
        std::string s(n, '\0');
        bytes(s.data(), n);
        return s;
    }

    std::size_t offset() const { return offset_; }
    const std::string& path() const { return path_; }

    bool at_eof() {
        return in_.peek() == std::char_traits<char>::eof();
    }

private:
    std::string path_;
    std::ifstream in_;
    std::size_t offset_ = 0;
};

// Little-endian binary file writer.
class ByteWriter {
public:
    explicit ByteWriter(const std::string& path) : path_(path), out_(path, std::ios::binary) {
        if (!out_) throw IoError("cannot open " + path + " for writing");
    }

    void bytes(const void* src, std::size_t n) {
        out_.write(static_cast<const char*>(src), static_cast<std::streamsize>(n));
        if (!out_) throw IoError(path_ + ": write failed");
    }

    void u8(std::uint8_t v) { bytes(&v, 1); }

    void u16(std::uint16_t v) {
        std::uint8_t b[2] = {static_cast<std::uint8_t>(v), static_cast<std::uint8_t>(v >> 8)};
        bytes(b, 2);
    }

    void u32(std::uint32_t v) {
        std::uint8_t b[4];
        for (int i = 0; i < 4; ++i) b[i] = static_cast<std::uint8_t>(v >> (8 * i));
        bytes(b, 4);
    }

    void u64(std::uint64_t v) {
        std::uint8_t b[8];
        for (int i = 0; i < 8; ++i) b[i] = static_cast<std::uint8_t>(v >> (8 * i));
        bytes(b, 8);
    }

    void f32(float f) {
        std::uint32_t bits;
        std::memcpy(&bits, &f, 4);
        u32(bits);
    }

    void f32_array(const float* src, std::size_t count) {
        if constexpr (std::endian::native == std::endian::little) {
            bytes(src, count * 4);
        } else {
            for (std::size_t i = 0; i < count; ++i) f32(src[i]);
        }
    }

    void str(const std::string& s) { bytes(s.data(), s.size()); }

    void close() {
        out_.close();
        if (!out_) throw IoError(path_ + ": close failed");
    }

private:
    std::string path_;
    std::ofstream out_;
};

}  // namespace aart
