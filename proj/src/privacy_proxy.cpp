#include "fidstore/privacy_proxy.hpp"

#include "fidstore/messages.hpp"

namespace fidstore {

std::uint32_t PrivacyProxy::temp_partition(std::uint64_t query_id) {
  std::lock_guard lock(mu_);
  auto it = temps_.find(query_id);
  if (it != temps_.end()) return it->second;
  const auto id = store_.create_partition(PartitionKind::Temporary, ValueLayout::varlen());
  temps_.emplace(query_id, id);
  return id;
}

std::size_t PrivacyProxy::active_queries() const {
  std::lock_guard lock(mu_);
  return temps_.size();
}

Fid PrivacyProxy::ingest(std::uint64_t query_id, const ClientEnvelope& env,
                         std::optional<std::uint32_t> target) {
  envelope_ops_.fetch_add(1);
  const Bytes plain = cipher_.decrypt(env);
  const auto partition = target ? *target : temp_partition(query_id);
  return store_.put(partition, plain);
}

ClientEnvelope PrivacyProxy::reveal(Fid fid) {
  auto plain = store_.get(fid);
  if (!plain) fail(Errc::NotLive, to_string(fid));
  envelope_ops_.fetch_add(1);
  return cipher_.encrypt(*plain);
}

std::vector<Bytes> PrivacyProxy::load_operands(const std::vector<Fid>& fids) {
  std::vector<Bytes> out(fids.size());
  for (std::size_t i = 0; i < fids.size(); ++i)
    if (!store_.get_into(fids[i], out[i])) fail(Errc::NotLive, to_string(fids[i]));
  return out;
}

OperatorResponse PrivacyProxy::exec_operator(std::uint64_t query_id, const OperatorRequest& req) {
  const auto operands = load_operands(req.operands);
  const Evaluated r = evaluate(req.op, req.value_type, operands);
  if (!r.value) return OperatorResponse::plain_bool(r.flag);
  return OperatorResponse::new_fid(store_.put(temp_partition(query_id), *r.value));
}

std::vector<OpOutcome> PrivacyProxy::exec_batch(std::uint64_t query_id,
                                                const std::vector<OperatorRequest>& reqs) {
  std::vector<OpOutcome> out;
  out.reserve(reqs.size());
  for (std::size_t i = 0; i < reqs.size(); ++i) {
    OpOutcome o;
    try {
      if (reqs[i].chain_prev && i > 0) {
        const OpOutcome& prev = out.back();
        if (!prev.ok()) fail(prev.error, "chained on a failed request");
        if (prev.response->kind != OperatorResponse::Kind::NewFid)
          fail(Errc::TypeMismatch, "chained on a comparison");
        OperatorRequest req = reqs[i];
        if (req.operands.empty()) fail(Errc::InvalidArgument, "chained request without operands");
        req.operands[0] = prev.response->fid;
        o.response = exec_operator(query_id, req);
      } else {
        o.response = exec_operator(query_id, reqs[i]);
      }
    } catch (const Error& e) {
      o.error = e.code();
    }
    out.push_back(std::move(o));
  }
  return out;
}

void PrivacyProxy::end_query(std::uint64_t query_id) {
  std::uint32_t id;
  {
    std::lock_guard lock(mu_);
    auto it = temps_.find(query_id);
    if (it == temps_.end()) return;
    id = it->second;
    temps_.erase(it);
  }
  store_.release_partition(id);
}

std::uint64_t PrivacyProxy::reset_temporaries() {
  std::unordered_map<std::uint64_t, std::uint32_t> temps;
  {
    std::lock_guard lock(mu_);
    temps.swap(temps_);
  }
  std::uint64_t dropped = 0;
  for (const auto& [q, id] : temps) {
    dropped += store_.drop_temporary(id);
    store_.release_partition(id);
  }
  return dropped;
}

void PrivacyProxy::forget_queries() {
  std::lock_guard lock(mu_);
  temps_.clear();
}

// ---------------------------------------------------------------- zone

PrivacyZone::PrivacyZone(Vfs& disk, StoreConfig cfg, const AeadKey& client_key, AdversaryTrace* trace)
    : store_(std::make_unique<MappingStore>(disk, std::move(cfg), trace)),
      proxy_(std::make_unique<PrivacyProxy>(*store_, client_key)) {}

void PrivacyZone::crash() {
  store_->crash();
  proxy_->forget_queries();
}

std::uint64_t PrivacyZone::recover() {
  proxy_->forget_queries();
  return store_->recover();
}

Bytes PrivacyZone::handle(ByteView wire) {
  try {
    return dispatch(decode_request(wire));
  } catch (const Error& e) {
    return error_response(e.code(), e.what());
  }
}

Bytes PrivacyZone::dispatch(const Request& req) {
  ByteReader r(req.payload);
  Bytes out;
  ByteWriter w(out);
  switch (req.kind) {
    case MsgKind::Ingest: {
      std::optional<std::uint32_t> target;
      if (r.u8() != 0) target = r.u32();
      const auto n = r.u32();
      std::vector<Fid> fids;
      for (std::uint32_t i = 0; i < n; ++i)
        fids.push_back(proxy_->ingest(req.query_id, ClientEnvelope::parse(r.blob()), target));
      put_fids(w, fids);
      break;
    }
    case MsgKind::Reveal: {
      const auto fids = get_fids(r);
      w.u32(static_cast<std::uint32_t>(fids.size()));
      for (auto f : fids) w.blob(proxy_->reveal(f).serialize());
      break;
    }
    case MsgKind::ExecBatch: {
      const auto n = r.u32();
      std::vector<OperatorRequest> reqs;
      for (std::uint32_t i = 0; i < n; ++i) reqs.push_back(get_op_request(r));
      const auto outcomes = proxy_->exec_batch(req.query_id, reqs);
      w.u32(static_cast<std::uint32_t>(outcomes.size()));
      for (const auto& o : outcomes) put_outcome(w, o);
      break;
    }
    case MsgKind::Promote: {
      const auto perm = r.u32();
      const auto fids = get_fids(r);
      std::vector<Fid> promoted;
      for (auto f : fids) promoted.push_back(store_->promote(f, perm));
      put_fids(w, promoted);
      break;
    }
    case MsgKind::DeleteBatch: {
      std::uint64_t deleted = 0;
      for (auto f : get_fids(r)) {
        if (!store_->is_live(f)) continue;
        store_->remove(f);
        ++deleted;
      }
      w.u64(deleted);
      break;
    }
    case MsgKind::FlushLog:
      w.u64(store_->flush_log());
      break;
    case MsgKind::CreatePartition: {
      const auto kind = static_cast<PartitionKind>(r.u8());
      ValueLayout layout;
      layout.kind = static_cast<ValueLayout::Kind>(r.u8());
      layout.width = r.u32();
      w.u32(store_->create_partition(kind, layout));
      break;
    }
    case MsgKind::EndQuery:
      proxy_->end_query(req.query_id);
      break;
    case MsgKind::Prefetch:
      store_->prefetch_partition(r.u32());
      break;
    case MsgKind::ProbeLive: {
      const auto fids = get_fids(r);
      w.u32(static_cast<std::uint32_t>(fids.size()));
      for (auto f : fids) w.u8(store_->is_live(f) ? 1 : 0);
      break;
    }
    case MsgKind::ListLive:
      put_fids(w, store_->live_permanent_fids());
      break;
    case MsgKind::ResetTemporaries:
      w.u64(proxy_->reset_temporaries());
      break;
  }
  if (!r.done()) fail(Errc::ProtocolError, "trailing bytes in request");
  return ok_response(out);
}

}  // namespace fidstore
