#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "gap/core.hpp"

namespace gap {

struct AudioBlobRef {
    Digest digest;
    std::size_t byte_length = 0;
    std::string media_type;
};

/// Content-addressed audio store. Blobs are opaque; puts of identical bytes
/// collapse to one entry.
class BlobStore {
public:
    virtual ~BlobStore() = default;
    virtual AudioBlobRef put(std::string_view bytes, std::string_view media_type = "application/octet-stream") = 0;
    virtual bool contains(const Digest& digest) const = 0;
    virtual std::optional<std::string> get(const Digest& digest) const = 0;
};

class MemoryBlobStore final : public BlobStore {
public:
    AudioBlobRef put(std::string_view bytes, std::string_view media_type = "application/octet-stream") override;
    bool contains(const Digest& digest) const override;
    std::optional<std::string> get(const Digest& digest) const override;
    std::size_t size() const;

private:
    mutable std::mutex mutex_;
    std::map<Digest, std::string> blobs_;
};

/// Blobs live under <root>/<first two hex chars>/<digest>.
class DirectoryBlobStore final : public BlobStore {
public:
    explicit DirectoryBlobStore(std::filesystem::path root);

    AudioBlobRef put(std::string_view bytes, std::string_view media_type = "application/octet-stream") override;
    bool contains(const Digest& digest) const override;
    std::optional<std::string> get(const Digest& digest) const override;

    std::filesystem::path path_for(const Digest& digest) const;

private:
    std::filesystem::path root_;
    mutable std::mutex mutex_;
};

}  // namespace gap
