# Equivariant QCNN simulator, verifier and trainer
