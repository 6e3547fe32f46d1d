#pragma once

#include <json.hpp>

#include <fstream>
#include <map>
#include <string>

#include "soapguard/crypto.hpp"
#include "soapguard/errors.hpp"

namespace soapguard {

// Shared HMAC secrets, keyed by the id that KeyInfo carries.
class KeyStore {
public:
    KeyStore() = default;

    static KeyStore from_json_text(const std::string& text) {
        nlohmann::json doc;
        try {
            doc = nlohmann::json::parse(text);
        } catch (const nlohmann::json::exception& e) {
            throw KeyStoreError(std::string("keystore is not valid JSON: ") + e.what());
        }
        if (!doc.is_object()) throw KeyStoreError("keystore must be a JSON object");
        KeyStore ks;
        for (auto& [key_id, value] : doc.items()) {
            if (!value.is_string()) throw KeyStoreError("secret for " + key_id + " must be a hex string");
            Bytes secret;
            try {
                secret = from_hex(value.get<std::string>());
            } catch (const Error&) {
                throw KeyStoreError("secret for " + key_id + " is not valid hex");
            }
            if (secret.size() < 16 || secret.size() > 64)
                throw KeyStoreError("secret for " + key_id + " must be 16-64 bytes");
            ks.keys_.emplace(key_id, std::move(secret));
        }
        return ks;
    }

    static KeyStore load(const std::string& path) {
        std::ifstream in(path, std::ios::binary);
        if (!in) throw KeyStoreError("cannot open keystore " + path);
        std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
        return from_json_text(text);
    }

    const Bytes& key(const std::string& key_id) const {
        auto it = keys_.find(key_id);
        if (it == keys_.end()) throw UnknownKey("no key with id " + key_id);
        return it->second;
    }

    bool has(const std::string& key_id) const { return keys_.count(key_id) != 0; }
    std::size_t size() const { return keys_.size(); }

    void put(const std::string& key_id, Bytes secret) {
        if (secret.size() < 16 || secret.size() > 64)
            throw KeyStoreError("secret must be 16-64 bytes");
        keys_[key_id] = std::move(secret);
    }

private:
    std::map<std::string, Bytes> keys_;
};

}  // namespace soapguard
