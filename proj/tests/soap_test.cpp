#include "soapguard/soap.hpp"

#include <gtest/gtest.h>

#include "testutil.hpp"

using soapguard::NodePath;
using soapguard::XmlNode;

namespace {

const char* kEnvelope =
    "<soap:Envelope>"
    "<soap:Header>"
    "<To>service</To>"
    "<Action role=\"none\" mustUnderstand=\"false\">op</Action>"
    "<Trace role=\"next\"/>"
    "<MessageID>urn:uuid:42</MessageID>"
    "<wsse:Security role=\"ultimateReceiver\" mustUnderstand=\"true\"/>"
    "</soap:Header>"
    "<soap:Body wsu:Id=\"1\"><op/></soap:Body>"
    "</soap:Envelope>";

}  // namespace

TEST(AsEnvelope, HeaderAndBody) {
    XmlNode root = soapguard::parse(kEnvelope);
    soapguard::EnvelopeShape shape = soapguard::as_envelope(root);
    ASSERT_TRUE(shape.header.has_value());
    EXPECT_EQ((NodePath{0}), *shape.header);
    EXPECT_EQ((NodePath{1}), shape.body);
}

TEST(AsEnvelope, BodyOnly) {
    XmlNode root = soapguard::parse("<Envelope><Body/></Envelope>");
    soapguard::EnvelopeShape shape = soapguard::as_envelope(root);
    EXPECT_FALSE(shape.header.has_value());
    EXPECT_EQ((NodePath{0}), shape.body);
}

TEST(AsEnvelope, RejectsOtherShapes) {
    EXPECT_THROW(soapguard::as_envelope(soapguard::parse("<NotEnvelope><Body/></NotEnvelope>")),
                 soapguard::NotAnEnvelope);
    EXPECT_THROW(soapguard::as_envelope(soapguard::parse("<Envelope/>")),
                 soapguard::NotAnEnvelope);
    EXPECT_THROW(soapguard::as_envelope(soapguard::parse("<Envelope><Header/></Envelope>")),
                 soapguard::NotAnEnvelope);
    EXPECT_THROW(
        soapguard::as_envelope(soapguard::parse("<Envelope><Body/><Header/></Envelope>")),
        soapguard::NotAnEnvelope);
    EXPECT_THROW(
        soapguard::as_envelope(soapguard::parse("<Envelope><Body/><Body/></Envelope>")),
        soapguard::NotAnEnvelope);
    EXPECT_THROW(soapguard::as_envelope(soapguard::parse("<Envelope>text<Body/></Envelope>")),
                 soapguard::NotAnEnvelope);
}

TEST(HeaderBlocks, RolesAndMustUnderstand) {
    XmlNode root = soapguard::parse(kEnvelope);
    auto blocks = soapguard::header_blocks(root);
    ASSERT_EQ(5u, blocks.size());

    EXPECT_EQ("To", blocks[0].name);
    EXPECT_EQ("ultimateReceiver", blocks[0].role);  // absent attribute defaults
    EXPECT_FALSE(blocks[0].must_understand);

    EXPECT_EQ("Action", blocks[1].name);
    EXPECT_EQ("none", blocks[1].role);
    EXPECT_FALSE(blocks[1].must_understand);

    EXPECT_EQ("Trace", blocks[2].name);
    EXPECT_EQ("next", blocks[2].role);

    EXPECT_EQ("wsse:Security", blocks[4].name);
    EXPECT_TRUE(blocks[4].must_understand);
    EXPECT_EQ((NodePath{0, 4}), blocks[4].path);
}

TEST(HeaderBlocks, EmptyWithoutHeader) {
    XmlNode root = soapguard::parse("<Envelope><Body/></Envelope>");
    EXPECT_TRUE(soapguard::header_blocks(root).empty());
}

TEST(ProcessedBlocks, UltimateReceiverView) {
    XmlNode root = soapguard::parse(kEnvelope);
    auto blocks = soapguard::processed_blocks(root, soapguard::roles::ultimate_receiver);
    ASSERT_EQ(4u, blocks.size());
    EXPECT_EQ("To", blocks[0].name);
    EXPECT_EQ("Trace", blocks[1].name);  // "next" is processed by every node
    EXPECT_EQ("MessageID", blocks[2].name);
    EXPECT_EQ("wsse:Security", blocks[3].name);
}

TEST(ProcessedBlocks, IntermediaryView) {
    XmlNode root = soapguard::parse(kEnvelope);
    auto blocks = soapguard::processed_blocks(root, soapguard::roles::next);
    ASSERT_EQ(1u, blocks.size());
    EXPECT_EQ("Trace", blocks[0].name);
}

// role="none" material is invisible to every processing view even though it
// is still part of the document.
TEST(ProcessedBlocks, NoneIsInvisibleEverywhere) {
    XmlNode root = soapguard::parse(kEnvelope);
    for (auto node_role : {soapguard::roles::next, soapguard::roles::ultimate_receiver}) {
        for (const auto& block : soapguard::processed_blocks(root, node_role))
            EXPECT_NE("Action", block.name);
    }
}

TEST(ProcessedBlocks, UnknownRoleIsNotProcessed) {
    XmlNode root = soapguard::parse(
        "<Envelope><Header><X role=\"other\"/></Header><Body/></Envelope>");
    EXPECT_TRUE(soapguard::processed_blocks(root, soapguard::roles::ultimate_receiver).empty());
    EXPECT_TRUE(soapguard::processed_blocks(root, soapguard::roles::next).empty());
}

TEST(MessageMeta, ExtractsFirstMatches) {
    XmlNode root = soapguard::parse(kEnvelope);
    soapguard::MessageMeta meta = soapguard::message_meta(root);
    ASSERT_TRUE(meta.message_id.has_value());
    EXPECT_EQ("urn:uuid:42", *meta.message_id);
    ASSERT_TRUE(meta.to.has_value());
    EXPECT_EQ("service", *meta.to);
    ASSERT_TRUE(meta.action.has_value());
    EXPECT_EQ("op", *meta.action);
}

TEST(MessageMeta, MissingFieldsStayEmpty) {
    XmlNode root = soapguard::parse("<Envelope><Body/></Envelope>");
    soapguard::MessageMeta meta = soapguard::message_meta(root);
    EXPECT_FALSE(meta.message_id.has_value());
    EXPECT_FALSE(meta.to.has_value());
    EXPECT_FALSE(meta.action.has_value());
}
