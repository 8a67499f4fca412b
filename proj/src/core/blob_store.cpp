#include "gap/blob_store.hpp"

#include <fstream>
#include <sstream>

namespace gap {

namespace {

bool is_digest(const Digest& d) {
    if (d.size() != 64) return false;
    for (char c : d)
        if (!((c >= '0' && c <= '9') || (c >= 'a' && c <= 'f'))) return false;
    return true;
}

}  // namespace

AudioBlobRef MemoryBlobStore::put(std::string_view bytes, std::string_view media_type) {
    auto digest = content_digest(bytes);
    std::lock_guard lock(mutex_);
    blobs_.try_emplace(digest, bytes);
    return {digest, bytes.size(), std::string(media_type)};
}

bool MemoryBlobStore::contains(const Digest& digest) const {
    std::lock_guard lock(mutex_);
    return blobs_.count(digest) != 0;
}

std::optional<std::string> MemoryBlobStore::get(const Digest& digest) const {
    std::lock_guard lock(mutex_);
    auto it = blobs_.find(digest);
    if (it == blobs_.end()) return std::nullopt;
    return it->second;
}

std::size_t MemoryBlobStore::size() const {
    std::lock_guard lock(mutex_);
    return blobs_.size();
}

DirectoryBlobStore::DirectoryBlobStore(std::filesystem::path root) : root_(std::move(root)) {
    std::error_code ec;
    std::filesystem::create_directories(root_, ec);
    if (ec) fail(Errc::StorageError, "cannot create blob directory " + root_.string() + ": " + ec.message());
}

std::filesystem::path DirectoryBlobStore::path_for(const Digest& digest) const {
    return root_ / digest.substr(0, 2) / digest;
}

AudioBlobRef DirectoryBlobStore::put(std::string_view bytes, std::string_view media_type) {
    auto digest = content_digest(bytes);
    auto path = path_for(digest);
    std::lock_guard lock(mutex_);
    if (!std::filesystem::exists(path)) {
        std::filesystem::create_directories(path.parent_path());
        auto tmp = path;
        tmp += ".tmp";
        {
            std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
            out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
            if (!out) fail(Errc::StorageError, "failed writing blob " + digest);
        }
        std::filesystem::rename(tmp, path);
    }
    return {digest, bytes.size(), std::string(media_type)};
}

bool DirectoryBlobStore::contains(const Digest& digest) const {
    if (!is_digest(digest)) return false;
    std::lock_guard lock(mutex_);
    return std::filesystem::exists(path_for(digest));
}

std::optional<std::string> DirectoryBlobStore::get(const Digest& digest) const {
    if (!is_digest(digest)) return std::nullopt;
    std::lock_guard lock(mutex_);
    std::ifstream in(path_for(digest), std::ios::binary);
    if (!in) return std::nullopt;
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace gap
