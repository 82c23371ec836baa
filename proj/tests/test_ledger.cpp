#include "doctest.h"

#include "ledger_fixture.hpp"
#include "rcchain/crypto.hpp"
#include "rcchain/ledger/export.hpp"
#include "rcchain/reputation.hpp"

using namespace rcchain;
using namespace rcchain::ledger;

namespace {

// Header hash rebuilt byte by byte, independent of the library encoder.
crypto::Digest oracle_header(const Block& b) {
    std::string ids;
    for (const auto& t : b.txs) ids += t.proposal.tx_id;
    auto body = crypto::sha256(std::string_view(ids));
    std::string buf;
    for (int s = 56; s >= 0; s -= 8) buf.push_back(char((b.number >> s) & 0xff));
    buf.append(reinterpret_cast<const char*>(b.prev_hash.data()), 32);
    buf.append(reinterpret_cast<const char*>(body.data()), 32);
    return crypto::sha256(std::string_view(buf));
}

} // namespace

TEST_CASE("ca registration") {
    CertificateAuthority ca(1);
    reputation::ReputationLedger rep;
    auto id = ca.register_identity("org1", Role::client, "A-001", rep);
    CHECK(id.id == "A-001");
    CHECK(rep.is_registered("A-001"));
    CHECK(rep.direct("X", "A-001") == 0.5);
    CHECK_THROWS_AS(ca.register_identity("org1", Role::client, "A-001"), RegistrationError);
    CHECK_THROWS_AS(ca.register_identity("org1", Role::client, ""), RegistrationError);

    ca.revoke("A-001");
    CHECK(ca.is_revoked("A-001"));
    CHECK_THROWS_AS(ca.register_identity("org2", Role::client, "A-001"), RegistrationError);
    CHECK_THROWS(ca.sign("A-001", "msg"));
    CHECK_THROWS(ca.sign("nobody", "msg"));
}

TEST_CASE("signatures verify only for the signer and message") {
    CertificateAuthority ca(1);
    ca.register_identity("o", Role::client, "a");
    ca.register_identity("o", Role::client, "b");
    auto sig = ca.sign("a", "hello");
    CHECK(ca.verify("a", "hello", sig));
    CHECK_FALSE(ca.verify("a", "hellO", sig));
    CHECK_FALSE(ca.verify("b", "hello", sig));
    CHECK_FALSE(ca.verify("ghost", "hello", sig));
    // different CA seed, different keys
    CertificateAuthority other(2);
    other.register_identity("o", Role::client, "a");
    CHECK(other.sign("a", "hello") != sig);
}

TEST_CASE("endorsement") {
    LedgerFixture fx;
    ChainLedger chain;
    auto p = make_proposal(fx.ca, "client", TxKind::qa_request, "put q/1 ask", 0, 0.0);

    auto res = endorse(p, fx.policy, fx.peers, chain.world_state(), fx.ca);
    CHECK(res.status == EndorseStatus::ok);
    CHECK(res.tx.endorsements.size() == 6);
    CHECK(check_policy(res.tx.endorsements, fx.policy, result_hash(res.tx.rw), fx.ca));

    auto again = endorse(p, fx.policy, fx.peers, chain.world_state(), fx.ca);
    CHECK(again.tx.endorsements.front().result_hash == res.tx.endorsements.front().result_hash);
    for (const auto& e : res.tx.endorsements) CHECK(e.result_hash == result_hash(res.tx.rw));

    auto down = fx.peers;
    for (auto& peer : down)
        if (peer.id.starts_with("org2")) peer.reachable = false;
    auto missing = endorse(p, fx.policy, down, chain.world_state(), fx.ca);
    CHECK(missing.status == EndorseStatus::insufficient);
    CHECK(missing.tx.endorsements.size() == 4);

    // sending to too few peers
    std::vector<EndorsingPeer> few{fx.peers[0]};
    CHECK(endorse(p, fx.policy, few, chain.world_state(), fx.ca).status == EndorseStatus::insufficient);

    // a threshold of two per org needs both peers of every org
    EndorsementPolicy strict{{"org1", "org2", "org3"}, 2};
    auto one_down = fx.peers;
    one_down[0].reachable = false;
    CHECK(endorse(p, strict, fx.peers, chain.world_state(), fx.ca).status == EndorseStatus::ok);
    CHECK(endorse(p, strict, one_down, chain.world_state(), fx.ca).status == EndorseStatus::insufficient);

    // forged signature does not count
    auto forged = res.tx.endorsements;
    for (auto& e : forged)
        if (e.endorser_org == "org3") e.sig[0] = e.sig[0] == 'a' ? 'b' : 'a';
    CHECK_FALSE(check_policy(forged, fx.policy, result_hash(res.tx.rw), fx.ca));
}

TEST_CASE("simulated execution") {
    WorldState ws{{"a", {"1", 3}}};
    auto rw = simulate_execution(TxKind::data_index, "put a 2\nget b\nput a 3\nnoise", ws);
    REQUIRE(rw.reads.size() == 2);
    CHECK(rw.reads[0] == ReadItem{"a", 3});
    CHECK(rw.reads[1] == ReadItem{"b", 0});
    REQUIRE(rw.writes.size() == 2);
    CHECK(rw.writes[1] == WriteItem{"a", "3"});
}

TEST_CASE("ordering batch cut") {
    LedgerFixture fx;
    ChainLedger chain;
    OrderingConfig cfg;
    OrderingService os(cfg);

    for (int k = 0; k < 10; ++k) os.submit(fx.tx("put k" + std::to_string(k) + " x", chain), 0.1 * k);
    auto b = os.order_batch(1.0);
    REQUIRE(b);
    CHECK(b->txs.size() == 10);
    CHECK(b->number == 1);
    CHECK(b->prev_hash == chain.tip_hash());

    for (int k = 0; k < 3; ++k) os.submit(fx.tx("put t" + std::to_string(k) + " x", chain), 5.0);
    CHECK_FALSE(os.order_batch(6.9).has_value());
    REQUIRE(os.next_timeout());
    CHECK(*os.next_timeout() == doctest::Approx(7.0));
    auto t = os.order_batch(7.0);
    REQUIRE(t);
    CHECK(t->txs.size() == 3);
    CHECK(t->prev_hash == header_hash(*b));

    // over-full: exactly batch_size oldest, remainder stays
    for (int k = 0; k < 13; ++k) os.submit(fx.tx("put o" + std::to_string(k) + " x", chain), 8.0);
    auto o = os.order_batch(8.0);
    REQUIRE(o);
    CHECK(o->txs.size() == 10);
    CHECK(o->txs.front().proposal.payload == "put o0 x");
    CHECK(os.pending() == 3);

    CHECK(batch_cut_count(0, 0, 10, 2, 100) == 0);
    CHECK(batch_cut_count(3, 0, 10, 2, 1.99) == 0);
    CHECK(batch_cut_count(3, 0, 10, 2, 2.0) == 3);
    CHECK(batch_cut_count(25, 0, 10, 2, 0) == 10);
}

TEST_CASE("ordering majority rule") {
    LedgerFixture fx;
    ChainLedger chain;
    OrderingService os(OrderingConfig{});
    os.crash(0);
    CHECK(os.available());
    os.crash(1);
    CHECK_FALSE(os.available());
    for (int k = 0; k < 10; ++k) os.submit(fx.tx("put m" + std::to_string(k) + " x", chain), 0);
    CHECK_FALSE(os.order_batch(10).has_value());
    CHECK(os.pending() == 10);
    os.recover(1);
    auto b = os.order_batch(10);
    REQUIRE(b);
    CHECK(b->txs.size() == 10);
}

TEST_CASE("minority orderer restart loses and reorders nothing") {
    LedgerFixture fx;
    ChainLedger ref, with_restart;
    OrderingService a(OrderingConfig{}), b(OrderingConfig{});
    for (int k = 0; k < 35; ++k) {
        auto t = fx.tx("put r" + std::to_string(k) + " x", ref);
        a.submit(t, k * 0.1);
        b.submit(t, k * 0.1);
        if (k == 12) b.crash(2);
        if (k == 25) b.recover(2);
        if (auto blk = a.order_batch(k * 0.1)) validate_and_commit(*blk, ref, fx.policy, fx.ca);
        if (auto blk = b.order_batch(k * 0.1)) validate_and_commit(*blk, with_restart, fx.policy, fx.ca);
    }
    if (auto blk = a.order_batch(100)) validate_and_commit(*blk, ref, fx.policy, fx.ca);
    if (auto blk = b.order_batch(100)) validate_and_commit(*blk, with_restart, fx.policy, fx.ca);
    CHECK(ref.tx_log().size() == 35);
    CHECK(ref == with_restart);
}

TEST_CASE("header hash encoding") {
    LedgerFixture fx;
    auto chain = fx.build(4);
    CHECK(chain.blocks().front().number == 0);
    CHECK(chain.blocks().front().prev_hash == crypto::zero_digest);
    CHECK(chain.blocks().front().txs.empty());
    for (const auto& b : chain.blocks()) CHECK(header_hash(b) == oracle_header(b));
    for (std::size_t k = 1; k < chain.blocks().size(); ++k)
        CHECK(chain.blocks()[k].prev_hash == header_hash(chain.blocks()[k - 1]));
}

TEST_CASE("mvcc double spend") {
    LedgerFixture fx;
    ChainLedger chain;
    fx.commit(chain, {fx.tx("put coin alice", chain)});
    auto spend1 = fx.tx("put coin bob", chain);
    auto spend2 = fx.tx("put coin carol", chain);
    auto rep = fx.commit(chain, {spend1, spend2});
    REQUIRE(rep.codes.size() == 2);
    CHECK(rep.codes[0] == ValidationCode::valid);
    CHECK(rep.codes[1] == ValidationCode::mvcc_conflict);
    CHECK(chain.world_state().at("coin").value == "bob");
    CHECK(chain.world_state().at("coin").version == 2);
    CHECK(chain.tx_log().size() == 3);
}

TEST_CASE("policy rejection") {
    LedgerFixture fx;
    ChainLedger chain;
    auto t = fx.tx("put only org1 2", chain);
    std::erase_if(t.endorsements, [](const Endorsement& e) { return e.endorser_org == "org3"; });
    auto rep = fx.commit(chain, {t});
    CHECK(rep.codes[0] == ValidationCode::policy);
    CHECK_FALSE(chain.world_state().contains("only"));
    REQUIRE(chain.tx_log().size() == 1);
    CHECK(chain.tx_log()[0].code == ValidationCode::policy);
}

TEST_CASE("bad client signature") {
    LedgerFixture fx;
    ChainLedger chain;
    auto t = fx.tx("put s 1", chain);
    t.proposal.client_sig = std::string(t.proposal.client_sig.size(), '0');
    CHECK(fx.commit(chain, {t}).codes[0] == ValidationCode::bad_signature);
}

TEST_CASE("duplicate rejection") {
    LedgerFixture fx;
    ChainLedger chain;
    auto t = fx.tx("put d 1", chain);
    CHECK(fx.commit(chain, {t}).codes[0] == ValidationCode::valid);
    CHECK(fx.commit(chain, {t}).codes[0] == ValidationCode::duplicate);
    CHECK(chain.world_state().at("d").version == 1);
    CHECK(chain.tx_log().size() == 2);
}

TEST_CASE("block rejection on wrong number or link") {
    LedgerFixture fx;
    ChainLedger chain;
    auto t = fx.tx("put x 1", chain);
    CHECK_THROWS_AS(validate_and_commit(make_block(2, chain.tip_hash(), {t}), chain, fx.policy, fx.ca),
                    BlockRejected);
    CHECK_THROWS_AS(validate_and_commit(make_block(1, crypto::sha256(std::string_view("x")), {t}), chain,
                                        fx.policy, fx.ca),
                    BlockRejected);
    CHECK(chain.tip_number() == 0);
}

TEST_CASE("world state versions count valid writes and replay matches") {
    LedgerFixture fx;
    auto chain = fx.build(6);
    CHECK(chain.world_state().at("shared").version == 6);
    CHECK(chain.world_state().at("key3").version == 1);
    CHECK(replay_world_state(chain.tx_log()) == chain.world_state());

    std::map<std::string, std::uint64_t> last;
    for (const auto& e : chain.tx_log()) {
        if (e.code != ValidationCode::valid) continue;
        CHECK(check_policy(e.tx.endorsements, fx.policy, result_hash(e.tx.rw), fx.ca));
        for (const auto& w : e.tx.rw.writes) {
            auto& v = last[w.key];
            ++v;
        }
    }
    for (const auto& [k, v] : last) CHECK(chain.world_state().at(k).version == v);
}

TEST_CASE("verify chain") {
    LedgerFixture fx;
    CHECK(verify_chain(ChainLedger{}, fx.policy, fx.ca).ok);
    auto chain = fx.build(5);
    CHECK(verify_chain(chain, fx.policy, fx.ca).ok);

    auto tampered = chain;
    tampered.mutable_blocks()[3].txs[0].proposal.payload[4] ^= 0x01;
    auto v = verify_chain(tampered, fx.policy, fx.ca);
    CHECK_FALSE(v.ok);
    REQUIRE(v.first_bad_block);
    CHECK(*v.first_bad_block == 3);

    auto flagged = chain;
    flagged.mutable_blocks()[2].flags[0] = ValidationCode::mvcc_conflict;
    auto f = verify_chain(flagged, fx.policy, fx.ca);
    CHECK_FALSE(f.ok);
    CHECK(*f.first_bad_block == 2);
}

TEST_CASE("peer catch-up") {
    LedgerFixture fx;
    auto source = fx.build(9);
    ChainLedger lagging;
    for (std::size_t k = 1; k <= 5; ++k)
        validate_and_commit(source.blocks()[k], lagging, fx.policy, fx.ca);
    CHECK(lagging.tip_number() == 5);
    sync_peer(lagging, source, fx.policy, fx.ca);
    CHECK(lagging.tip_number() == 9);
    CHECK(lagging == source);
    CHECK(lagging.blocks() == source.blocks());
    CHECK(lagging.world_state() == source.world_state());
    CHECK(lagging.tx_log() == source.tx_log());

    auto same = source;
    sync_peer(same, source, fx.policy, fx.ca);
    CHECK(same == source);

    ChainLedger behind;
    for (std::size_t k = 1; k <= 5; ++k) validate_and_commit(source.blocks()[k], behind, fx.policy, fx.ca);
    auto tampered = source;
    tampered.mutable_blocks()[7].txs[1].proposal.payload += "!";
    CHECK_THROWS_AS(sync_peer(behind, tampered, fx.policy, fx.ca), IntegrityError);
    CHECK(behind.tip_number() == 5);

    // divergent prefix
    LedgerFixture other;
    ChainLedger fork;
    other.commit(fork, {other.tx("put elsewhere 1", fork)});
    CHECK_THROWS_AS(sync_peer(fork, source, fx.policy, fx.ca), IntegrityError);
}

TEST_CASE("export format and verification") {
    LedgerFixture fx;
    auto chain = fx.build(4);
    auto text = export_chain(chain);
    std::size_t lines = std::count(text.begin(), text.end(), '\n');
    CHECK(lines == 5);
    auto first = text.substr(0, text.find('\n'));
    CHECK(first.find("\"body_hash\"") < first.find("\"number\""));
    CHECK(first.find("\"number\":0") != std::string::npos);
    CHECK(text.find("\"reason\":\"ok\"") != std::string::npos);

    std::istringstream in(text);
    CHECK(verify_export(in).ok);

    // flip one hex digit of block 3's recorded tx id
    auto flipped = text;
    std::size_t line3 = 0;
    for (int k = 0; k < 3; ++k) line3 = flipped.find('\n', line3) + 1;
    auto pos = flipped.find("\"tx_id\":\"", line3) + 9;
    flipped[pos] = flipped[pos] == '0' ? '1' : '0';
    std::istringstream bad(flipped);
    auto v = verify_export(bad);
    CHECK_FALSE(v.ok);
    CHECK(*v.first_bad_block == 3);

    std::istringstream truncated(text.substr(0, text.size() / 2));
    CHECK_THROWS_AS(verify_export(truncated), ExportParseError);
    std::istringstream empty("");
    CHECK_THROWS_AS(verify_export(empty), ExportParseError);

    auto ws = export_world_state(chain.world_state());
    CHECK(ws.find("\"shared\":{\"value\":\"3\",\"version\":4}") != std::string::npos);
}
