# End-to-end NMR and MRI reconstruction drivers
